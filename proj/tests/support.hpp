// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shared test fixtures and independent oracles. Oracles here deliberately
// re-derive expectations by brute force, never through the code paths they
// check.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "vapitest/backend.hpp"
#include "vapitest/corpus.hpp"
#include "vapitest/match_core.hpp"
#include "vapitest/matching.hpp"
#include "vapitest/rig.hpp"
#include "vapitest/testcase_gen.hpp"

namespace vapitest::testing {

/// Runs both mapping stages over a whole corpus with the rule backend.
struct CorpusMatchOutput {
    std::vector<MatchResult> results;
    std::vector<Skipped> skipped;
};

inline CorpusMatchOutput match_corpus(const Corpus& corpus, Strictness strictness) {
    RulesBackend backend;
    CorpusMatchOutput out;
    for (const auto& set : extract_test_objects(corpus.spec)) {
        MatchEngine engine(backend, strictness);
        auto [partials, s1] = engine.map_api_to_can(set, corpus.can_table);
        auto [results, s2] = engine.map_can_to_vv(partials, corpus.vv_table);
        out.results.insert(out.results.end(), results.begin(), results.end());
        out.skipped.insert(out.skipped.end(), s1.begin(), s1.end());
        out.skipped.insert(out.skipped.end(), s2.begin(), s2.end());
    }
    return out;
}

// --- exhaustive maximum-score assignment oracle -----------------------------

struct OraclePair {
    size_t left, right;
    double score;
};

/// Enumerates every injective partial assignment over the threshold-filtered
/// score matrix and returns a maximum-total-score one. When several
/// assignments tie on total score, any of them is "the" maximum; callers
/// check set equality only when the maximizer is unique.
class AssignmentOracle {
public:
    AssignmentOracle(std::vector<std::vector<double>> scores, double min_score)
        : scores_(std::move(scores)), min_score_(min_score) {}

    std::vector<OraclePair> solve() {
        best_total_ = -1.0;
        maximizers_ = 0;
        best_.clear();
        current_.clear();
        size_t rows = scores_.size();
        used_.assign(rows ? scores_[0].size() : 0, false);
        recurse(0);
        return best_;
    }

    double best_total() const { return best_total_; }

    /// Number of distinct pair sets achieving the best total.
    int maximizer_count() const { return maximizers_; }

private:
    void recurse(size_t row) {
        if (row == scores_.size()) {
            double total = 0;
            for (const auto& p : current_) total += p.score;
            if (total > best_total_ + 1e-9) {
                best_total_ = total;
                best_ = current_;
                maximizers_ = 1;
            } else if (total > best_total_ - 1e-9) {
                ++maximizers_;
            }
            return;
        }
        recurse(row + 1);  // leave this row unmatched
        for (size_t col = 0; col < scores_[row].size(); ++col) {
            if (used_[col] || scores_[row][col] < min_score_) continue;
            used_[col] = true;
            current_.push_back({row, col, scores_[row][col]});
            recurse(row + 1);
            current_.pop_back();
            used_[col] = false;
        }
    }

    std::vector<std::vector<double>> scores_;
    double min_score_;
    std::vector<bool> used_;
    std::vector<OraclePair> current_, best_;
    double best_total_ = -1.0;
    int maximizers_ = 0;
};

// --- separator-grammar oracle for informal enums -----------------------------

/// Independent split: replaces every separator occurrence with a sentinel in
/// one pass, then splits on the sentinel.
inline std::vector<std::string> split_rule_oracle(std::string text) {
    const std::vector<std::string> seps = {" or ", " OR ", "/", ","};
    for (;;) {
        size_t best_pos = std::string::npos;
        size_t best_len = 0;
        for (const auto& sep : seps) {
            size_t pos = text.find(sep);
            if (pos != std::string::npos && pos < best_pos) {
                best_pos = pos;
                best_len = sep.size();
            }
        }
        if (best_pos == std::string::npos) break;
        text.replace(best_pos, best_len, "\x01");
    }
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\x01') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    std::vector<std::string> trimmed;
    for (auto& s : out) {
        std::string t(vapitest::text::trim(s));
        if (!t.empty() && std::find(trimmed.begin(), trimmed.end(), t) == trimmed.end())
            trimmed.push_back(t);
    }
    return trimmed;
}

// --- datetime recomposition oracle -------------------------------------------

inline std::string recompose_oracle(const std::map<std::string, int64_t>& parts,
                                    const std::string& hours_key,
                                    const std::string& minutes_key) {
    char buf[6];
    std::snprintf(buf, sizeof(buf), "%02d:%02d", static_cast<int>(parts.at(hours_key)),
                  static_cast<int>(parts.at(minutes_key)));
    return std::string(buf);
}

// --- wire protocol test server ------------------------------------------------

/// Minimal model server speaking the typed wire contract, backed by the rule
/// engine. `misbehave_first` makes the first N responses violate the schema,
/// for retry tests.
class WireServer {
public:
    explicit WireServer(int misbehave_first = 0)
        : backend_(Lexicons::builtin(), UnitRegistry::builtin()),
          misbehave_(misbehave_first) {
        server_.Post("/complete", [this](const httplib::Request& req,
                                         httplib::Response& res) {
            ++requests_seen_;
            if (requests_seen_ <= misbehave_) {
                res.set_content("{\"outputs\":{\"pairs\":42}}", "application/json");
                return;
            }
            try {
                json body = json::parse(req.body);
                BackendRequest breq;
                std::string task = body.at("task").get<std::string>();
                for (auto t : {BackendTask::key_match, BackendTask::value_match,
                               BackendTask::pseudocode_match, BackendTask::unit_infer})
                    if (to_string(t) == task) breq.task = t;
                breq.strictness =
                    strictness_from_string(body.at("strictness").get<std::string>());
                breq.inputs = body.at("inputs");
                for (const auto& f : body.at("output_schema")) {
                    FieldSpec spec;
                    spec.name = f.at("name").get<std::string>();
                    std::string type = f.at("type").get<std::string>();
                    for (auto ft : {FieldType::text, FieldType::integer, FieldType::real,
                                    FieldType::boolean, FieldType::list, FieldType::record})
                        if (to_string(ft) == type) spec.type = ft;
                    breq.output_schema.push_back(spec);
                }
                BackendResponse bres = backend_.complete(breq);
                res.set_content(json{{"outputs", bres.outputs}}.dump(), "application/json");
            } catch (const std::exception& e) {
                res.status = 500;
                res.set_content(std::string("{\"error\":\"") + e.what() + "\"}",
                                "application/json");
            }
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~WireServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/complete"; }
    int requests_seen() const { return requests_seen_; }

private:
    RulesBackend backend_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
    int misbehave_ = 0;
    std::atomic<int> requests_seen_ = 0;
};

// --- brute-force verdict oracle (direct VV inspection) -------------------------

/// Replays one plan case against an in-process rig using direct state access
/// for every check: PUT cases inspect the VV table after the gateway call,
/// GET cases write the VV table directly and compare the response fields.
inline Verdict verdict_oracle(const PlanCase& pc, Rig& rig) {
    bool ok = true;
    json last_get;
    try {
        for (const auto& step : pc.steps) {
            switch (step.verb) {
                case StepVerb::vv_set:
                    rig.vv_set(step.key, step.raw);
                    break;
                case StepVerb::put: {
                    json payload = json::object();
                    for (const auto& [k, v] : step.payload) {
                        double num;
                        if (v == "true")
                            payload[k] = true;
                        else if (v == "false")
                            payload[k] = false;
                        else if (vapitest::text::parse_double(v, num))
                            payload[k] = num;
                        else
                            payload[k] = v;
                    }
                    if (rig.api_put(step.endpoint, payload).status != 200) ok = false;
                    break;
                }
                case StepVerb::get: {
                    auto r = rig.api_get(step.endpoint);
                    if (r.status != 200)
                        ok = false;
                    else
                        last_get = r.body;
                    break;
                }
                case StepVerb::vv_expect: {
                    double actual = rig.vv_get(step.key);  // direct table read
                    if (std::fabs(actual - step.raw) > 1e-6) ok = false;
                    break;
                }
                case StepVerb::api_expect: {
                    if (!last_get.is_object() || !last_get.contains(step.key)) {
                        ok = false;
                        break;
                    }
                    const json& v = last_get[step.key];
                    std::string actual = v.is_string() ? v.get<std::string>()
                                         : v.is_boolean()
                                             ? (v.get<bool>() ? "true" : "false")
                                             : vapitest::text::format_double(v.get<double>());
                    double de, da;
                    bool num = vapitest::text::parse_double(step.value, de) &&
                               vapitest::text::parse_double(actual, da);
                    if (num ? std::fabs(de - da) > 1e-6 : step.value != actual) ok = false;
                    break;
                }
            }
        }
    } catch (const Error&) {
        return Verdict::error;
    }
    return ok ? Verdict::pass : Verdict::fail;
}

}  // namespace vapitest::testing
