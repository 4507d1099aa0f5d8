// SPDX-License-Identifier: Apache-2.0
#pragma once

// Matcher backends. Every matching task flows through one entry point taking
// a structured request and returning a schema-checked structured response,
// satisfiable by the local rule-based backend or by a remote model server
// speaking the typed-output-with-retry contract.

#include <condition_variable>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vapitest/errors.hpp"
#include "vapitest/lexicon.hpp"
#include "vapitest/match_core.hpp"
#include "vapitest/text.hpp"
#include "vapitest/unit_engine.hpp"

namespace vapitest {

using json = nlohmann::ordered_json;

enum class BackendTask { key_match, value_match, pseudocode_match, unit_infer, testcase_gen };

inline std::string to_string(BackendTask t) {
    switch (t) {
        case BackendTask::key_match: return "key_match";
        case BackendTask::value_match: return "value_match";
        case BackendTask::pseudocode_match: return "pseudocode_match";
        case BackendTask::unit_infer: return "unit_infer";
        case BackendTask::testcase_gen: return "testcase_gen";
    }
    return "?";
}

enum class FieldType { text, integer, real, boolean, list, record };

inline std::string to_string(FieldType t) {
    switch (t) {
        case FieldType::text: return "text";
        case FieldType::integer: return "integer";
        case FieldType::real: return "real";
        case FieldType::boolean: return "boolean";
        case FieldType::list: return "list";
        case FieldType::record: return "record";
    }
    return "?";
}

struct FieldSpec {
    std::string name;
    FieldType type = FieldType::text;
};

struct BackendRequest {
    BackendTask task = BackendTask::key_match;
    json inputs;
    std::vector<FieldSpec> output_schema;
    Strictness strictness = Strictness::moderate;
    int max_retries = 3;
};

struct BackendResponse {
    json outputs;
    int attempts_used = 1;
};

/// Field-by-field validation; returns a violation description or empty.
inline std::string validate_outputs(const json& outputs,
                                    const std::vector<FieldSpec>& schema) {
    if (!outputs.is_object()) return "outputs is not a record";
    for (const auto& field : schema) {
        if (!outputs.contains(field.name)) return "missing field '" + field.name + "'";
        const json& v = outputs[field.name];
        bool ok = false;
        switch (field.type) {
            case FieldType::text: ok = v.is_string(); break;
            case FieldType::integer: ok = v.is_number_integer(); break;
            case FieldType::real: ok = v.is_number(); break;
            case FieldType::boolean: ok = v.is_boolean(); break;
            case FieldType::list: ok = v.is_array(); break;
            case FieldType::record: ok = v.is_object(); break;
        }
        if (!ok)
            return "field '" + field.name + "' is not of type " + to_string(field.type);
    }
    for (auto it = outputs.begin(); it != outputs.end(); ++it) {
        bool known = false;
        for (const auto& field : schema) known = known || field.name == it.key();
        if (!known) return "unexpected field '" + it.key() + "'";
    }
    return "";
}

/// Task instructions sent to remote backends: the strictness level is stated
/// explicitly and worked examples per level are embedded.
inline std::string build_prompt(BackendTask task, Strictness strictness) {
    std::string p = "Task: " + to_string(task) + ". Strictness level: " +
                    to_string(strictness) + ".\n";
    switch (task) {
        case BackendTask::key_match:
            p += "Pair up keys from 'left' with keys from 'right' that name the same "
                 "signal. Categories with examples: spelling (DriverTimeSetting ~ "
                 "DriverTimeSeting), abbreviation (standard ~ STD), format "
                 "(standard_mode ~ STANDARDMODE), logical (OFF ~ NOT_ON), semantic "
                 "(AutoStart ~ AutoLaunch).\n";
            break;
        case BackendTask::value_match:
            p += "Pair up enumerated values with equal meaning, e.g. TRUE ~ Active, "
                 "FALSE ~ Inactive.\n";
            break;
        case BackendTask::pseudocode_match:
            p += "Select the alternatives from an informal OR-chain that realize the "
                 "given value. Under strict return only the single best alternative; "
                 "under relaxed return every plausible one.\n";
            break;
        case BackendTask::unit_infer:
            p += "Infer the measurement unit implied by the attribute description, or "
                 "answer with an empty string when no unit is stated.\n";
            break;
        case BackendTask::testcase_gen:
            p += "Produce test case records for the matched chains.\n";
            break;
    }
    p += "Strictness guidance: strict = only certain pairs, moderate = confident "
         "pairs, relaxed = plausible pairs.\n";
    return p;
}

inline json request_to_wire(const BackendRequest& req, const json& violations) {
    json schema = json::array();
    for (const auto& f : req.output_schema)
        schema.push_back(json{{"name", f.name}, {"type", to_string(f.type)}});
    return json{{"task", to_string(req.task)},
                {"strictness", to_string(req.strictness)},
                {"prompt", build_prompt(req.task, req.strictness)},
                {"inputs", req.inputs},
                {"output_schema", schema},
                {"violations", violations}};
}

/// One request/response exchange with whatever serves the matcher.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string post(const std::string& body) = 0;
};

/// Typed-output contract: validate the response against the schema and
/// re-send with the violation appended, up to max_retries extra attempts.
inline BackendResponse complete_typed(const BackendRequest& req, Transport& transport) {
    json violations = json::array();
    std::string last;
    for (int attempt = 1; attempt <= req.max_retries + 1; ++attempt) {
        std::string body = request_to_wire(req, violations).dump();
        std::string raw = transport.post(body);
        json parsed;
        std::string violation;
        try {
            parsed = json::parse(raw);
        } catch (const nlohmann::json::exception& e) {
            violation = std::string("response is not a structured record: ") + e.what();
        }
        if (violation.empty()) {
            if (!parsed.is_object() || !parsed.contains("outputs"))
                violation = "response lacks an 'outputs' record";
            else
                violation = validate_outputs(parsed["outputs"], req.output_schema);
        }
        if (violation.empty()) return BackendResponse{parsed["outputs"], attempt};
        last = violation;
        violations.push_back(violation);
    }
    throw SchemaViolation("after " + std::to_string(req.max_retries + 1) + " attempt(s): " +
                          last);
}

class Backend {
public:
    virtual ~Backend() = default;
    virtual BackendResponse complete(const BackendRequest& req) = 0;
    virtual std::string name() const = 0;
};

/// Deterministic local backend built on the scoring rules and lexicons.
class RulesBackend : public Backend {
public:
    explicit RulesBackend(Lexicons lexicons = Lexicons::builtin(),
                          UnitRegistry registry = UnitRegistry::builtin())
        : lexicons_(std::move(lexicons)), registry_(std::move(registry)) {}

    std::string name() const override { return "rules"; }

    const Lexicons& lexicons() const { return lexicons_; }

    BackendResponse complete(const BackendRequest& req) override {
        json outputs;
        switch (req.task) {
            case BackendTask::key_match:
                outputs = run_pair_task(req, /*labels=*/false);
                break;
            case BackendTask::value_match:
                outputs = run_pair_task(req, /*labels=*/true);
                break;
            case BackendTask::pseudocode_match:
                outputs = run_pseudocode(req);
                break;
            case BackendTask::unit_infer:
                outputs = run_unit_infer(req);
                break;
            case BackendTask::testcase_gen:
                throw BackendError("rules backend does not serve testcase_gen");
        }
        std::string violation = validate_outputs(outputs, req.output_schema);
        if (!violation.empty())
            throw BackendError("rules backend produced invalid outputs: " + violation);
        return BackendResponse{outputs, 1};
    }

private:
    json run_pair_task(const BackendRequest& req, bool labels) const {
        auto left = req.inputs.at("left").get<std::vector<std::string>>();
        auto right = req.inputs.at("right").get<std::vector<std::string>>();
        auto scorer = [&](const std::string& a, const std::string& b) {
            return labels ? score_labels(a, b, lexicons_) : score_keys(a, b, lexicons_);
        };
        auto assigned = greedy_assign(left, right, threshold(req.strictness), scorer);
        json pairs = json::array();
        for (const auto& p : assigned) {
            pairs.push_back(json{{"left", left[p.left]},
                                 {"right", right[p.right]},
                                 {"category", to_string(p.category)},
                                 {"score", p.score}});
        }
        return json{{"pairs", pairs}};
    }

    json run_pseudocode(const BackendRequest& req) const {
        std::string label = req.inputs.at("label").get<std::string>();
        const json& alts = req.inputs.at("alternatives");
        struct Alt {
            size_t index;
            double score;
        };
        std::vector<Alt> scored;
        for (size_t i = 0; i < alts.size(); ++i) {
            double s = score_labels(label, alts[i].at("label").get<std::string>(),
                                    lexicons_).score;
            double bs = lexicons_.boolean_score(label, alts[i].at("label").get<std::string>());
            scored.push_back({i, std::max(s, bs)});
        }
        json selected = json::array();
        double min_score = threshold(req.strictness);
        if (req.strictness == Strictness::strict) {
            // at most the single best alternative; ties resolved by source order
            const Alt* best = nullptr;
            for (const auto& a : scored)
                if (a.score >= min_score && (!best || a.score > best->score)) best = &a;
            if (best)
                selected.push_back(json{{"index", best->index}, {"score", best->score}});
        } else {
            for (const auto& a : scored)
                if (a.score >= min_score)
                    selected.push_back(json{{"index", a.index}, {"score", a.score}});
        }
        return json{{"selected", selected}};
    }

    json run_unit_infer(const BackendRequest& req) const {
        std::string desc = text::lower(req.inputs.at("description").get<std::string>());
        // longest alias first, so "km/h" beats "h"
        for (const auto& alias : registry_.aliases()) {
            size_t pos = desc.find(alias);
            while (pos != std::string::npos) {
                bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(desc[pos - 1]));
                size_t end = pos + alias.size();
                bool right_ok =
                    end == desc.size() || !std::isalnum(static_cast<unsigned char>(desc[end]));
                if (left_ok && right_ok) return json{{"unit", alias}};
                pos = desc.find(alias, pos + 1);
            }
        }
        return json{{"unit", ""}};
    }

    Lexicons lexicons_;
    UnitRegistry registry_;
};

/// Backend adapter over a Transport, i.e. the remote / replayed model path.
class ClientBackend : public Backend {
public:
    ClientBackend(std::shared_ptr<Transport> transport, std::string name,
                  int max_parallel = 4)
        : transport_(std::move(transport)), name_(std::move(name)),
          max_parallel_(max_parallel > 0 ? max_parallel : 1) {}

    std::string name() const override { return name_; }

    BackendResponse complete(const BackendRequest& req) override {
        std::unique_lock lock(mutex_);
        in_flight_cv_.wait(lock, [&] { return in_flight_ < max_parallel_; });
        ++in_flight_;
        lock.unlock();
        try {
            BackendResponse resp = complete_typed(req, *transport_);
            finish();
            return resp;
        } catch (...) {
            finish();
            throw;
        }
    }

private:
    void finish() {
        std::lock_guard lock(mutex_);
        --in_flight_;
        in_flight_cv_.notify_one();
    }

    std::shared_ptr<Transport> transport_;
    std::string name_;
    int max_parallel_;
    int in_flight_ = 0;
    std::mutex mutex_;
    std::condition_variable in_flight_cv_;
};

enum class ReplayMode { record, replay };

/// Persists request-hash -> raw response. Record mode wraps a live transport;
/// replay mode serves the store and errors on a miss, making runs hermetic.
class ReplayTransport : public Transport {
public:
    ReplayTransport(std::string store_path, ReplayMode mode,
                    std::shared_ptr<Transport> inner = nullptr)
        : store_path_(std::move(store_path)), mode_(mode), inner_(std::move(inner)) {
        if (mode_ == ReplayMode::record && !inner_)
            throw TransportError("record mode needs a live transport");
        load();
    }

    std::string post(const std::string& body) override {
        std::string key = text::fnv1a_hex(body);
        std::lock_guard lock(mutex_);
        if (mode_ == ReplayMode::replay) {
            auto it = store_.find(key);
            if (it == store_.end())
                throw ReplayMiss("no recorded response for request hash " + key);
            return it->second;
        }
        std::string resp = inner_->post(body);
        store_[key] = resp;
        save();
        return resp;
    }

private:
    void load() {
        std::ifstream in(store_path_);
        if (!in) {
            if (mode_ == ReplayMode::replay)
                throw TransportError("cannot open replay store " + store_path_);
            return;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        std::string content = ss.str();
        if (text::trim(content).empty()) return;
        json root;
        try {
            root = json::parse(content);
        } catch (const nlohmann::json::exception& e) {
            throw TransportError("corrupt replay store: " + std::string(e.what()));
        }
        for (auto it = root.begin(); it != root.end(); ++it)
            store_[it.key()] = it.value().get<std::string>();
    }

    void save() const {
        json root = json::object();
        for (const auto& [k, v] : store_) root[k] = v;
        std::ofstream out(store_path_);
        if (!out) throw TransportError("cannot write replay store " + store_path_);
        out << root.dump(2) << "\n";
    }

    std::string store_path_;
    ReplayMode mode_;
    std::shared_ptr<Transport> inner_;
    std::map<std::string, std::string> store_;
    mutable std::mutex mutex_;
};

/// Canned responses for harness tests; errors when the script runs dry.
class ScriptedTransport : public Transport {
public:
    explicit ScriptedTransport(std::vector<std::string> responses)
        : responses_(std::move(responses)) {}

    std::string post(const std::string& body) override {
        requests.push_back(body);
        if (next_ >= responses_.size()) throw TransportError("script exhausted");
        return responses_[next_++];
    }

    std::vector<std::string> requests;

private:
    std::vector<std::string> responses_;
    size_t next_ = 0;
};

}  // namespace vapitest
