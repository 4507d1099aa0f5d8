// SPDX-License-Identifier: Apache-2.0
#pragma once

// The two fuzzy mapping stages: API properties -> CAN signals and CAN
// signals -> VV entries, for keys and for enumerated values, at a
// configurable strictness, through a pluggable matcher backend. Every input
// property ends up in exactly one of {MatchResult, Skipped}.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vapitest/backend.hpp"
#include "vapitest/errors.hpp"
#include "vapitest/match_core.hpp"
#include "vapitest/signal_tables.hpp"
#include "vapitest/spec_ingest.hpp"
#include "vapitest/unit_engine.hpp"

namespace vapitest {

struct MatchCandidate {
    std::string left_key;
    std::string right_key;
    MatchCategory category = MatchCategory::none;
    double score = 0.0;

    bool operator==(const MatchCandidate&) const = default;
};

struct ValueMapping {
    std::vector<std::pair<std::string, std::string>> pairs;  // (left, right) labels
    std::vector<std::string> residual_left;
    std::vector<std::string> residual_right;

    bool operator==(const ValueMapping&) const = default;
};

struct SelectedAlternative {
    size_t index = 0;
    std::string key;
    std::string label;
    double score = 0.0;

    bool operator==(const SelectedAlternative&) const = default;
};

enum class DtRole { hours, minutes };

inline std::string to_string(DtRole r) { return r == DtRole::hours ? "hours" : "minutes"; }

inline DtRole dt_role_from_string(std::string_view s) {
    if (s == "hours") return DtRole::hours;
    if (s == "minutes") return DtRole::minutes;
    throw SchemaError("unknown datetime role '" + std::string(s) + "'");
}

/// One API value resolved through both stages, with executable raw values.
struct ChainValue {
    std::string api_label;
    std::string can_key;
    std::string can_label;
    int64_t can_raw = 0;
    std::string vv_key;
    std::string vv_label;
    int64_t vv_raw = 0;

    bool operator==(const ChainValue&) const = default;
};

struct MatchResult {
    std::string id;
    std::string endpoint;
    Method method = Method::GET;
    ApiProperty property;
    std::string can_key;
    std::string vv_key;
    MatchCandidate key_api_to_can;
    MatchCandidate key_can_to_vv;
    ValueMapping values_api_to_can;
    ValueMapping values_can_to_vv;
    std::vector<ChainValue> chain;              // enum/boolean chains
    std::optional<ConversionPlan> conversion;   // numeric chains
    std::optional<DtRole> role;                 // datetime chains
    std::string rationale;

    bool operator==(const MatchResult&) const = default;
};

/// A property excluded from testing, with the failing stage and a reason.
struct Skipped {
    std::string endpoint;
    Method method = Method::GET;
    std::string key;
    std::string stage;
    std::string reason;

    bool operator==(const Skipped&) const = default;
};

/// Executable CAN-side resolution of one API label, fixed at stage 1.
struct ResolvedValue {
    std::string api_label;
    std::string can_key;
    std::string can_label;
    int64_t can_raw = 0;
};

/// Stage-1 output: API->CAN resolved, VV leg still open.
struct PartialMatch {
    std::string endpoint;
    Method method = Method::GET;
    ApiProperty property;
    CanSignal can;
    MatchCandidate key_match;
    ValueMapping value_map;                    // api label -> can label (all pairs)
    std::vector<ResolvedValue> resolved;       // primary executable resolution
    // api label -> (can_key, can_label) when the executable resolution comes
    // from a pseudocode alternative rather than the row encoding
    std::map<std::string, std::pair<std::string, std::string>> primary_pseudo;
    std::optional<Unit> api_unit;
    std::optional<Unit> can_unit;
    std::optional<DtRole> role;
};

class MatchEngine {
public:
    MatchEngine(Backend& backend, Strictness strictness,
                const Lexicons& lexicons = Lexicons::builtin(),
                const UnitRegistry& registry = UnitRegistry::builtin())
        : backend_(backend), strictness_(strictness), lexicons_(lexicons),
          registry_(registry) {}

    Strictness strictness() const { return strictness_; }
    const UnitRegistry& registry() const { return registry_; }

    /// One-to-one key assignment through the backend. Pairs below the
    /// strictness threshold are never emitted.
    std::vector<MatchCandidate> match_keys(const std::vector<std::string>& left,
                                           const std::vector<std::string>& right) {
        if (left.empty() || right.empty()) return {};
        BackendRequest req;
        req.task = BackendTask::key_match;
        req.inputs = json{{"left", left}, {"right", right}};
        req.output_schema = {{"pairs", FieldType::list}};
        req.strictness = strictness_;
        BackendResponse resp = call(req);
        return parse_pairs(resp.outputs, left, right);
    }

    /// Label pairing for an enumerated or boolean domain against a table
    /// encoding. Residuals are exactly the unmatched labels on each side.
    ValueMapping match_values(const ValueDomain& left_domain, const Encoding& right) {
        std::vector<std::string> left = domain_labels(left_domain);
        std::vector<std::string> right_labels = right.labels();
        ValueMapping mapping;
        if (!left.empty() && !right_labels.empty()) {
            BackendRequest req;
            req.task = BackendTask::value_match;
            req.inputs = json{{"left", left}, {"right", right_labels}};
            req.output_schema = {{"pairs", FieldType::list}};
            req.strictness = strictness_;
            BackendResponse resp = call(req);
            for (const auto& c : parse_pairs(resp.outputs, left, right_labels))
                mapping.pairs.emplace_back(c.left_key, c.right_key);
        }
        fill_residuals(mapping, left, right_labels);
        return mapping;
    }

    /// Alternative selection for one (key, label) against an OR-chain:
    /// strict keeps at most the best alternative, relaxed keeps everything
    /// above the relaxed threshold.
    std::vector<SelectedAlternative> match_pseudocode(const std::string& label,
                                                      const PseudocodeAlternatives& alts) {
        if (alts.alternatives.empty()) return {};
        json alt_list = json::array();
        for (const auto& [k, l] : alts.alternatives)
            alt_list.push_back(json{{"key", k}, {"label", l}});
        BackendRequest req;
        req.task = BackendTask::pseudocode_match;
        req.inputs = json{{"label", label}, {"alternatives", alt_list}};
        req.output_schema = {{"selected", FieldType::list}};
        req.strictness = strictness_;
        BackendResponse resp = call(req);

        std::vector<SelectedAlternative> out;
        for (const auto& sel : resp.outputs["selected"]) {
            if (!sel.is_object() || !sel.contains("index") || !sel.contains("score"))
                throw BackendError("pseudocode selection lacks index/score");
            size_t idx = sel["index"].get<size_t>();
            if (idx >= alts.alternatives.size())
                throw BackendError("pseudocode selection index out of range");
            double score = sel["score"].get<double>();
            if (score < threshold(strictness_)) continue;
            out.push_back({idx, alts.alternatives[idx].first, alts.alternatives[idx].second,
                           score});
        }
        std::sort(out.begin(), out.end(),
                  [](const auto& a, const auto& b) { return a.index < b.index; });
        return out;
    }

    /// Stage 1. Total: every property of the set lands in the partial list or
    /// in the skipped list.
    std::pair<std::vector<PartialMatch>, std::vector<Skipped>> map_api_to_can(
        const TestObjectSet& set, const CanTable& table) {
        std::vector<PartialMatch> partials;
        std::vector<Skipped> skipped;
        auto skip = [&](const ApiProperty& p, std::string stage, std::string reason) {
            skipped.push_back({set.endpoint_path, set.method, p.key, std::move(stage),
                               std::move(reason)});
        };

        std::vector<CanSignal> candidates = lookup_candidates(set.endpoint_path, table);
        if (candidates.empty()) {
            for (const auto& p : set.properties)
                skip(p, "candidate_retrieval", "no_candidates");
            return {partials, skipped};
        }

        std::vector<const ApiProperty*> keyed;
        for (const auto& p : set.properties) {
            if (p.domain.kind == DomainKind::free_text) {
                skip(p, "value_match", "unsupported_domain");
            } else if (p.domain.kind == DomainKind::datetime) {
                map_datetime(set, p, candidates, table, partials, skipped);
            } else {
                keyed.push_back(&p);
            }
        }

        std::vector<std::string> left;
        for (const auto* p : keyed) left.push_back(p->key);
        std::vector<std::string> right;
        for (const auto& c : candidates) right.push_back(c.key);
        std::vector<MatchCandidate> assigned = match_keys(left, right);

        for (const auto* p : keyed) {
            const MatchCandidate* key_match = nullptr;
            for (const auto& a : assigned)
                if (a.left_key == p->key) key_match = &a;
            if (!key_match) {
                skip(*p, "key_match", "no_key_match");
                continue;
            }
            const CanSignal* signal = nullptr;
            for (const auto& c : candidates)
                if (c.key == key_match->right_key) signal = &c;

            PartialMatch partial;
            partial.endpoint = set.endpoint_path;
            partial.method = set.method;
            partial.property = *p;
            partial.can = *signal;
            partial.key_match = *key_match;

            if (p->domain.kind == DomainKind::numeric_range) {
                if (!p->domain.has_bounds) {
                    skip(*p, "value_match", "missing_range");
                    continue;
                }
                partial.api_unit = resolve_api_unit(*p);
                partial.can_unit = parse_optional_unit(signal->unit_text);
                partials.push_back(std::move(partial));
                continue;
            }

            // enumeration / boolean
            std::string failure = map_enum_values(*p, *signal, table, partial);
            if (!failure.empty()) {
                skip(*p, "value_match", failure);
                continue;
            }
            partials.push_back(std::move(partial));
        }
        return {partials, skipped};
    }

    /// Stage 2. Honors explicit bound_can_key (no fuzzy scoring); otherwise
    /// resolves the VV entry by fuzzy key match over the whole VV table.
    std::pair<std::vector<MatchResult>, std::vector<Skipped>> map_can_to_vv(
        const std::vector<PartialMatch>& partials, const VvTable& table) {
        std::vector<MatchResult> results;
        std::vector<Skipped> skipped;
        for (const auto& partial : partials) {
            try {
                complete_chain(partial, table, results);
            } catch (const ChainSkip& s) {
                skipped.push_back({partial.endpoint, partial.method, partial.property.key,
                                   s.stage, s.reason});
            }
        }
        return {results, skipped};
    }

private:
    struct ChainSkip {
        std::string stage;
        std::string reason;
    };

    BackendResponse call(BackendRequest& req) {
        try {
            return backend_.complete(req);
        } catch (const SchemaViolation&) {
            throw;
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw BackendError(e.what());
        }
    }

    static std::vector<std::string> domain_labels(const ValueDomain& d) {
        if (d.kind == DomainKind::enumeration) return d.labels;
        if (d.kind == DomainKind::boolean) return {"TRUE", "FALSE"};
        throw SchemaError("value matching requires an enumerated or boolean domain");
    }

    std::vector<MatchCandidate> parse_pairs(const json& outputs,
                                            const std::vector<std::string>& left,
                                            const std::vector<std::string>& right) {
        std::vector<MatchCandidate> out;
        std::set<std::string> seen_left, seen_right;
        for (const auto& pair : outputs.at("pairs")) {
            if (!pair.is_object() || !pair.contains("left") || !pair.contains("right") ||
                !pair.contains("category") || !pair.contains("score"))
                throw BackendError("pair lacks left/right/category/score");
            MatchCandidate c;
            c.left_key = pair["left"].get<std::string>();
            c.right_key = pair["right"].get<std::string>();
            c.category = category_from_string(pair["category"].get<std::string>());
            c.score = pair["score"].get<double>();
            if (c.score < 0.0 || c.score > 1.0)
                throw BackendError("pair score out of [0,1]");
            if (std::find(left.begin(), left.end(), c.left_key) == left.end() ||
                std::find(right.begin(), right.end(), c.right_key) == right.end())
                throw BackendError("pair references unknown key '" + c.left_key + "'/'" +
                                   c.right_key + "'");
            if (!seen_left.insert(c.left_key).second || !seen_right.insert(c.right_key).second)
                throw BackendError("pairs are not one-to-one");
            if (c.score < threshold(strictness_)) continue;  // never emit below threshold
            out.push_back(std::move(c));
        }
        return out;
    }

    static void fill_residuals(ValueMapping& m, const std::vector<std::string>& left,
                               const std::vector<std::string>& right) {
        m.residual_left.clear();
        m.residual_right.clear();
        for (const auto& l : left) {
            bool hit = false;
            for (const auto& [a, b] : m.pairs) hit = hit || a == l;
            if (!hit) m.residual_left.push_back(l);
        }
        for (const auto& r : right) {
            bool hit = false;
            for (const auto& [a, b] : m.pairs) hit = hit || b == r;
            if (!hit) m.residual_right.push_back(r);
        }
    }

    std::optional<Unit> parse_optional_unit(const std::optional<std::string>& text) {
        if (!text) return std::nullopt;
        return registry_.try_parse_unit(*text);  // unknown surface form = unit-missing
    }

    /// API unit: explicit x-unit wins; otherwise the backend may infer one
    /// from the description. Inferred aliases unknown to the registry are
    /// discarded, never guessed.
    std::optional<Unit> resolve_api_unit(const ApiProperty& p) {
        if (p.unit_text) {
            if (auto u = registry_.try_parse_unit(*p.unit_text)) return u;
            return std::nullopt;
        }
        if (!p.description) return std::nullopt;
        BackendRequest req;
        req.task = BackendTask::unit_infer;
        req.inputs = json{{"description", *p.description}};
        req.output_schema = {{"unit", FieldType::text}};
        req.strictness = strictness_;
        BackendResponse resp = call(req);
        std::string alias = resp.outputs["unit"].get<std::string>();
        if (alias.empty()) return std::nullopt;
        return registry_.try_parse_unit(alias);
    }

    /// Value resolution for enum/boolean properties: direct encoding pairing
    /// first, pseudocode alternatives for labels the encoding cannot serve.
    /// Every domain label must resolve or the property is skipped.
    std::string map_enum_values(const ApiProperty& p, const CanSignal& signal,
                                const CanTable& table, PartialMatch& partial) {
        PseudocodeAlternatives alts;
        if (signal.pseudocode) {
            try {
                alts = parse_pseudocode(*signal.pseudocode);
            } catch (const GrammarError& e) {
                return std::string("pseudocode_grammar: ") + e.what();
            }
        }

        ValueMapping mapping = match_values(p.domain, signal.encoding);
        std::vector<std::string> labels = domain_labels(p.domain);

        // Pseudocode route for labels the direct encoding did not cover, and
        // extra one-to-many pairs under relaxed settings.
        if (!alts.alternatives.empty()) {
            for (const auto& label : labels) {
                bool direct = false;
                for (const auto& [l, r] : mapping.pairs) direct = direct || l == label;
                auto selections = match_pseudocode(label, alts);
                for (const auto& sel : selections) {
                    bool dup = false;
                    for (const auto& [l, r] : mapping.pairs)
                        dup = dup || (l == label && r == sel.label);
                    if (!dup) mapping.pairs.emplace_back(label, sel.label);
                }
                if (!direct && !selections.empty()) {
                    const SelectedAlternative* best = &selections.front();
                    for (const auto& s : selections)
                        if (s.score > best->score) best = &s;
                    partial.primary_pseudo[label] = {best->key, best->label};
                }
            }
        }
        fill_residuals(mapping, labels, signal.encoding.labels());

        if (mapping.pairs.empty()) return "no_value_pairs";
        if (!mapping.residual_left.empty())
            return "unmatched_labels: " + text::join(mapping.residual_left, ",");

        // Every domain label must resolve to an executable raw value.
        for (const auto& label : labels) {
            std::string can_key, can_label;
            if (!primary_resolution(partial, mapping, label, table, can_key, can_label))
                return "unresolvable_label: " + label;
            const CanSignal* row = can_key == partial.can.key ? &partial.can : table.find(can_key);
            partial.resolved.push_back(
                {label, can_key, can_label, *row->encoding.raw_of(can_label)});
        }
        partial.value_map = std::move(mapping);
        return "";
    }

    /// Primary (executable) CAN resolution of one API label: the direct
    /// encoding pair when present, else the recorded best pseudocode
    /// alternative. Fails when no raw value exists for the resolved label.
    bool primary_resolution(const PartialMatch& partial, const ValueMapping& mapping,
                            const std::string& label, const CanTable& table,
                            std::string& can_key, std::string& can_label) const {
        auto redirect = partial.primary_pseudo.find(label);
        if (redirect == partial.primary_pseudo.end()) {
            for (const auto& [l, r] : mapping.pairs) {
                if (l == label && partial.can.encoding.raw_of(r)) {
                    can_key = partial.can.key;
                    can_label = r;
                    return true;
                }
            }
            return false;
        }
        const auto& [alt_key, alt_label] = redirect->second;
        const CanSignal* row =
            alt_key == partial.can.key ? &partial.can : table.find(alt_key);
        if (!row || !row->encoding.raw_of(alt_label)) return false;
        can_key = row->key;
        can_label = alt_label;
        return true;
    }

    /// Datetime properties map to two CAN signals by role suffix: candidate
    /// keys are scored with their hours/minutes token stripped.
    void map_datetime(const TestObjectSet& set, const ApiProperty& p,
                      const std::vector<CanSignal>& candidates, const CanTable& table,
                      std::vector<PartialMatch>& partials, std::vector<Skipped>& skipped) {
        (void)table;
        struct RoleHit {
            const CanSignal* signal = nullptr;
            Scored scored;
        };
        RoleHit hits[2];
        for (const auto& c : candidates) {
            auto tokens = text::tokenize_key(c.key);
            if (tokens.empty()) continue;
            std::optional<DtRole> role;
            const std::string& tail = tokens.back();
            if (tail == "hours" || tail == "hour" || tail == "hrs" || tail == "hr")
                role = DtRole::hours;
            if (tail == "minutes" || tail == "minute" || tail == "mins" || tail == "min")
                role = DtRole::minutes;
            if (!role) continue;
            tokens.pop_back();
            std::string stripped = text::join(tokens, "_");
            Scored s = score_keys(p.key, stripped, lexicons_);
            if (s.score < threshold(strictness_)) continue;
            RoleHit& slot = hits[static_cast<int>(*role)];
            if (!slot.signal || s.score > slot.scored.score) slot = {&c, s};
        }
        if (!hits[0].signal || !hits[1].signal) {
            skipped.push_back({set.endpoint_path, set.method, p.key, "key_match",
                               "datetime_roles_incomplete"});
            return;
        }
        for (DtRole role : {DtRole::hours, DtRole::minutes}) {
            const RoleHit& hit = hits[static_cast<int>(role)];
            PartialMatch partial;
            partial.endpoint = set.endpoint_path;
            partial.method = set.method;
            partial.property = p;
            partial.can = *hit.signal;
            partial.key_match = {p.key, hit.signal->key, hit.scored.category,
                                 hit.scored.score};
            partial.role = role;
            partials.push_back(std::move(partial));
        }
    }

    void complete_chain(const PartialMatch& partial, const VvTable& table,
                        std::vector<MatchResult>& results) {
        MatchResult r;
        r.endpoint = partial.endpoint;
        r.method = partial.method;
        r.property = partial.property;
        r.can_key = partial.can.key;
        r.key_api_to_can = partial.key_match;
        r.values_api_to_can = partial.value_map;
        r.role = partial.role;

        const VvEntry* vv = resolve_vv(partial.can.key, table, r.key_can_to_vv);
        if (!vv) throw ChainSkip{"vv_key_match", "no_vv_match"};
        r.vv_key = vv->key;

        if (partial.property.domain.kind == DomainKind::numeric_range) {
            std::optional<Unit> vv_unit;
            if (vv->unit_text) vv_unit = registry_.try_parse_unit(*vv->unit_text);
            ReconcileResult rec;
            try {
                rec = reconcile(partial.api_unit, partial.can_unit, vv_unit);
            } catch (const DimensionMismatch& e) {
                throw ChainSkip{"unit_reconcile", std::string("dimension_mismatch: ") + e.what()};
            }
            if (rec.insufficient_context()) throw ChainSkip{"unit_reconcile", "missing_unit"};
            r.conversion = rec.plan;
        } else if (partial.property.domain.kind != DomainKind::datetime) {
            build_value_chain(partial, table, r);
        }

        r.id = "m:" + r.endpoint + ":" + to_string(r.method) + ":" + r.property.key +
               (r.role ? ":" + to_string(*r.role) : "");
        r.rationale = rationale_for(r);
        results.push_back(std::move(r));
    }

    const VvEntry* resolve_vv(const std::string& can_key, const VvTable& table,
                              MatchCandidate& key_match) {
        if (const VvEntry* bound = table.find_bound_to(can_key)) {
            key_match = {can_key, bound->key, MatchCategory::exact, 1.0};
            return bound;
        }
        std::vector<std::string> vv_keys;
        for (const auto& e : table.entries) vv_keys.push_back(e.key);
        auto assigned = match_keys({can_key}, vv_keys);
        if (assigned.empty()) return nullptr;
        key_match = assigned.front();
        return table.find(key_match.right_key);
    }

    /// Maps each resolved CAN value onto its VV entry. Labels redirected to a
    /// foreign signal resolve that signal's own VV entry.
    void build_value_chain(const PartialMatch& partial, const VvTable& table,
                           MatchResult& r) {
        // group resolved values by CAN key, order-stable
        std::vector<std::string> key_order;
        std::map<std::string, std::vector<const ResolvedValue*>> groups;
        for (const auto& v : partial.resolved) {
            if (!groups.count(v.can_key)) key_order.push_back(v.can_key);
            groups[v.can_key].push_back(&v);
        }

        bool primary_recorded = false;
        for (const auto& can_key : key_order) {
            const VvEntry* vv = nullptr;
            if (can_key == partial.can.key) {
                vv = table.find(r.vv_key);
            } else {
                MatchCandidate foreign;
                vv = resolve_vv(can_key, table, foreign);
            }
            if (!vv) throw ChainSkip{"vv_key_match", "no_vv_match: " + can_key};

            std::vector<std::string> can_labels;
            for (const auto* v : groups[can_key])
                if (std::find(can_labels.begin(), can_labels.end(), v->can_label) ==
                    can_labels.end())
                    can_labels.push_back(v->can_label);
            ValueMapping stage2 =
                match_values_lenient(ValueDomain::enumeration(can_labels), vv->encoding);
            if (!primary_recorded) {
                r.values_can_to_vv = stage2;
                primary_recorded = true;
            }

            for (const auto* v : groups[can_key]) {
                std::string vv_label;
                for (const auto& [cl, vl] : stage2.pairs)
                    if (cl == v->can_label) vv_label = vl;
                if (vv_label.empty())
                    throw ChainSkip{"vv_value_match", "unmatched_labels: " + v->can_label};
                auto vv_raw = vv->encoding.raw_of(vv_label);
                if (!vv_raw)
                    throw ChainSkip{"vv_value_match", "unmatched_labels: " + v->can_label};
                r.chain.push_back({v->api_label, v->can_key, v->can_label, v->can_raw,
                                   vv->key, vv_label, *vv_raw});
            }
        }

        // chain order follows the domain label order
        std::vector<std::string> labels = domain_labels(partial.property.domain);
        std::sort(r.chain.begin(), r.chain.end(),
                  [&](const ChainValue& a, const ChainValue& b) {
                      auto pos = [&](const std::string& l) {
                          return std::find(labels.begin(), labels.end(), l) - labels.begin();
                      };
                      return pos(a.api_label) < pos(b.api_label);
                  });
    }

    /// match_values without the enumeration>=2 domain constraint (stage 2 may
    /// carry a single matched label through).
    ValueMapping match_values_lenient(const ValueDomain& domain, const Encoding& enc) {
        ValueMapping m;
        std::vector<std::string> right_labels = enc.labels();
        if (!domain.labels.empty() && !right_labels.empty()) {
            BackendRequest req;
            req.task = BackendTask::value_match;
            req.inputs = json{{"left", domain.labels}, {"right", right_labels}};
            req.output_schema = {{"pairs", FieldType::list}};
            req.strictness = strictness_;
            BackendResponse resp = call(req);
            for (const auto& c : parse_pairs(resp.outputs, domain.labels, right_labels))
                m.pairs.emplace_back(c.left_key, c.right_key);
        }
        fill_residuals(m, domain.labels, right_labels);
        return m;
    }

    std::string rationale_for(const MatchResult& r) const {
        std::string s = "key " + r.key_api_to_can.left_key + "->" +
                        r.key_api_to_can.right_key + " (" +
                        to_string(r.key_api_to_can.category) + " " +
                        text::format_double(r.key_api_to_can.score) + "); vv " +
                        r.key_can_to_vv.left_key + "->" + r.key_can_to_vv.right_key + " (" +
                        to_string(r.key_can_to_vv.category) + ")";
        if (!r.chain.empty()) {
            s += "; values";
            for (const auto& c : r.chain)
                s += " " + c.api_label + "->" + c.can_label + "->" + c.vv_label;
        }
        if (r.conversion) s += "; conversion " + r.conversion->describe();
        if (r.role) s += "; role " + to_string(*r.role);
        return s;
    }

    Backend& backend_;
    Strictness strictness_;
    const Lexicons& lexicons_;
    const UnitRegistry& registry_;
};

// --- JSON bindings for matches.rec ---

inline void to_json(json& j, const MatchCandidate& c) {
    j = json{{"left", c.left_key},
             {"right", c.right_key},
             {"category", to_string(c.category)},
             {"score", c.score}};
}

inline void from_json(const json& j, MatchCandidate& c) {
    c.left_key = j.at("left").get<std::string>();
    c.right_key = j.at("right").get<std::string>();
    c.category = category_from_string(j.at("category").get<std::string>());
    c.score = j.at("score").get<double>();
}

inline void to_json(json& j, const ValueMapping& m) {
    json pairs = json::array();
    for (const auto& [l, r] : m.pairs) pairs.push_back(json::array({l, r}));
    j = json{{"pairs", pairs},
             {"residual_left", m.residual_left},
             {"residual_right", m.residual_right}};
}

inline void from_json(const json& j, ValueMapping& m) {
    m = ValueMapping{};
    for (const auto& p : j.at("pairs"))
        m.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    m.residual_left = j.at("residual_left").get<std::vector<std::string>>();
    m.residual_right = j.at("residual_right").get<std::vector<std::string>>();
}

inline void to_json(json& j, const ChainValue& c) {
    j = json{{"api_label", c.api_label}, {"can_key", c.can_key},
             {"can_label", c.can_label}, {"can_raw", c.can_raw},
             {"vv_key", c.vv_key},       {"vv_label", c.vv_label},
             {"vv_raw", c.vv_raw}};
}

inline void from_json(const json& j, ChainValue& c) {
    c.api_label = j.at("api_label").get<std::string>();
    c.can_key = j.at("can_key").get<std::string>();
    c.can_label = j.at("can_label").get<std::string>();
    c.can_raw = j.at("can_raw").get<int64_t>();
    c.vv_key = j.at("vv_key").get<std::string>();
    c.vv_label = j.at("vv_label").get<std::string>();
    c.vv_raw = j.at("vv_raw").get<int64_t>();
}

inline void to_json(json& j, const Rational& r) {
    j = json{{"num", r.num}, {"den", r.den}};
}

inline void from_json(const json& j, Rational& r) {
    r = Rational::of(j.at("num").get<int64_t>(), j.at("den").get<int64_t>());
}

inline void to_json(json& j, const ConversionPlan& p) {
    j = json{{"api_unit", p.api_unit},
             {"can_unit", p.can_unit},
             {"vv_unit", p.vv_unit},
             {"api_to_can", p.api_to_can},
             {"can_to_vv", p.can_to_vv}};
}

inline void from_json(const json& j, ConversionPlan& p) {
    p.api_unit = j.at("api_unit").get<std::string>();
    p.can_unit = j.at("can_unit").get<std::string>();
    p.vv_unit = j.at("vv_unit").get<std::string>();
    p.api_to_can = j.at("api_to_can").get<Rational>();
    p.can_to_vv = j.at("can_to_vv").get<Rational>();
}

inline void to_json(json& j, const MatchResult& r) {
    j = json{{"id", r.id},
             {"endpoint", r.endpoint},
             {"method", to_string(r.method)},
             {"property", r.property},
             {"can_key", r.can_key},
             {"vv_key", r.vv_key},
             {"key_api_to_can", r.key_api_to_can},
             {"key_can_to_vv", r.key_can_to_vv},
             {"values_api_to_can", r.values_api_to_can},
             {"values_can_to_vv", r.values_can_to_vv},
             {"chain", r.chain},
             {"rationale", r.rationale}};
    if (r.conversion) j["conversion"] = *r.conversion;
    if (r.role) j["role"] = to_string(*r.role);
}

inline void from_json(const json& j, MatchResult& r) {
    r = MatchResult{};
    r.id = j.at("id").get<std::string>();
    r.endpoint = j.at("endpoint").get<std::string>();
    r.method = method_from_string(j.at("method").get<std::string>());
    r.property = j.at("property").get<ApiProperty>();
    r.can_key = j.at("can_key").get<std::string>();
    r.vv_key = j.at("vv_key").get<std::string>();
    r.key_api_to_can = j.at("key_api_to_can").get<MatchCandidate>();
    r.key_can_to_vv = j.at("key_can_to_vv").get<MatchCandidate>();
    r.values_api_to_can = j.at("values_api_to_can").get<ValueMapping>();
    r.values_can_to_vv = j.at("values_can_to_vv").get<ValueMapping>();
    r.chain = j.at("chain").get<std::vector<ChainValue>>();
    r.rationale = j.at("rationale").get<std::string>();
    if (j.contains("conversion")) r.conversion = j["conversion"].get<ConversionPlan>();
    if (j.contains("role")) r.role = dt_role_from_string(j["role"].get<std::string>());
}

inline void to_json(json& j, const Skipped& s) {
    j = json{{"endpoint", s.endpoint},
             {"method", to_string(s.method)},
             {"key", s.key},
             {"stage", s.stage},
             {"reason", s.reason}};
}

inline void from_json(const json& j, Skipped& s) {
    s.endpoint = j.at("endpoint").get<std::string>();
    s.method = method_from_string(j.at("method").get<std::string>());
    s.key = j.at("key").get<std::string>();
    s.stage = j.at("stage").get<std::string>();
    s.reason = j.at("reason").get<std::string>();
}

}  // namespace vapitest
