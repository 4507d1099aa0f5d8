// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic, ground-truth-labeled evaluation corpora: API spec + CAN/VV
// tables + rig config + manifest, with controlled perturbations per obstacle
// category. forge() is a pure function of (seed, profile, size, faults).

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vapitest/executor.hpp"
#include "vapitest/io.hpp"
#include "vapitest/lexicon.hpp"
#include "vapitest/matching.hpp"
#include "vapitest/rig.hpp"
#include "vapitest/signal_tables.hpp"
#include "vapitest/spec_ingest.hpp"
#include "vapitest/testcase_gen.hpp"
#include "vapitest/unit_engine.hpp"

namespace vapitest {

enum class CorpusProfile { clean, fuzzy5, pseudocode, units, dependencies, mixed };

inline std::string to_string(CorpusProfile p) {
    switch (p) {
        case CorpusProfile::clean: return "clean";
        case CorpusProfile::fuzzy5: return "fuzzy5";
        case CorpusProfile::pseudocode: return "pseudocode";
        case CorpusProfile::units: return "units";
        case CorpusProfile::dependencies: return "dependencies";
        case CorpusProfile::mixed: return "mixed";
    }
    return "?";
}

inline CorpusProfile corpus_profile_from_string(std::string_view s) {
    for (auto p : {CorpusProfile::clean, CorpusProfile::fuzzy5, CorpusProfile::pseudocode,
                   CorpusProfile::units, CorpusProfile::dependencies, CorpusProfile::mixed})
        if (to_string(p) == s) return p;
    throw SchemaError("unknown corpus profile '" + std::string(s) + "'");
}

/// Ground truth for one property's key chain.
struct TrueMapping {
    std::string endpoint;
    std::string key;
    MatchCategory category = MatchCategory::exact;  // perturbation applied
    std::string can_key;
    std::string vv_key;
    bool covered_by_lexicon = true;  // semantic pairs only

    bool operator==(const TrueMapping&) const = default;
};

/// Ground truth for one pseudocode OR-chain.
struct PseudoChain {
    std::string endpoint;
    std::string key;        // property
    std::string api_label;  // the one-to-many side (e.g. TRUE)
    std::vector<std::string> alt_labels;
    std::vector<bool> valid;

    bool operator==(const PseudoChain&) const = default;
};

struct UnmappableEntry {
    std::string endpoint;
    std::string key;
    std::string reason;

    bool operator==(const UnmappableEntry&) const = default;
};

struct CorpusManifest {
    uint64_t seed = 0;
    std::string profile;
    int size = 0;
    std::vector<TrueMapping> true_mappings;
    std::vector<PseudoChain> pseudo_chains;
    std::vector<UnmappableEntry> unmappable;
    std::vector<FaultSpec> faults;
    std::vector<std::string> faulted_endpoints;
    std::vector<TestCase> ground_truth_cases;
    std::map<std::string, int> category_counts;
    int semantic_total = 0;
    int semantic_in_lexicon = 0;

    bool operator==(const CorpusManifest&) const = default;
};

struct Corpus {
    ApiSpec spec;
    CanTable can_table;
    VvTable vv_table;
    RigConfig rig_config;
    CorpusManifest manifest;
};

namespace forge_detail {

/// Deterministic across platforms (raw mt19937_64 draws, no distributions).
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next() { return gen_(); }
    size_t pick(size_t n) { return n == 0 ? 0 : static_cast<size_t>(next() % n); }
    bool chance(int percent) { return pick(100) < static_cast<size_t>(percent); }

    template <typename T>
    const T& choose(const std::vector<T>& v) {
        return v[pick(v.size())];
    }

private:
    std::mt19937_64 gen_;
};

inline const std::vector<std::string>& endpoint_words() {
    static const std::vector<std::string> v = {
        "climate", "speed",  "alarm",  "battery", "lighting", "door",
        "cruise",  "wiper",  "cabin",  "engine",  "brake",    "trailer",
        "fuel",    "mirror", "horn",   "seat",    "axle",     "gearbox",
        "route",   "tacho",  "window", "heater",  "coolant",  "suspension"};
    return v;
}

inline const std::vector<std::string>& property_words() {
    static const std::vector<std::string> v = {
        "reduced", "regular",  "weekly",  "rests",   "current",  "week",
        "driver",  "time",     "setting", "mode",    "target",   "level",
        "limit",   "state",    "power",   "charge",  "zone",     "boost",
        "comfort", "interval", "sensor",  "profile", "pressure", "status"};
    return v;
}

inline const std::vector<std::string>& enum_label_pool() {
    static const std::vector<std::string> v = {
        "STANDARD", "ECONOMY", "TURBO", "COMFORT", "SPORT", "AUTO",
        "MANUAL",   "HIGH",    "LOW",   "DAY",     "NIGHT", "ECO"};
    return v;
}

/// Word pairs usable for semantic perturbations: first a set carried by the
/// bundled synonym lexicon, then pairs beyond it (recall loss by design).
struct SynPair {
    std::string from, to;
    bool in_lexicon;
};

inline const std::vector<SynPair>& semantic_pool() {
    static const std::vector<SynPair> v = {
        {"speed", "velocity", true},   {"target", "desired", true},
        {"mode", "profile", true},     {"current", "present", true},
        {"rest", "break", true},       {"alarm", "alert", true},
        {"engine", "motor", false},    {"reduced", "decreased", false},
        {"door", "hatch", false},      {"warning", "caution", false},
    };
    return v;
}

/// Antonym-lexicon tokens usable for logical (negation) perturbations.
inline const std::vector<std::string>& antonym_tokens() {
    static const std::vector<std::string> v = {"on",     "off",      "open", "closed",
                                               "locked", "unlocked", "high", "low"};
    return v;
}

inline std::string camel(const std::vector<std::string>& words) {
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i == 0) {
            out += words[i];
        } else {
            std::string w = words[i];
            w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
            out += w;
        }
    }
    return out;
}

inline std::string snake(const std::vector<std::string>& words) {
    return text::join(words, "_");
}

/// 1-2 character edits keeping the folded form distinct from the original.
inline std::string spell_perturb(Rng& rng, const std::string& key) {
    std::string folded = text::fold_key(key);
    int edits = folded.size() >= 12 ? 2 : 1;
    for (int attempt = 0; attempt < 50; ++attempt) {
        std::string s = key;
        for (int e = 0; e < edits; ++e) {
            size_t pos = 1 + rng.pick(s.size() - 1);
            switch (rng.pick(3)) {
                case 0: s.erase(pos, 1); break;                      // deletion
                case 1: s[pos] = 'a' + static_cast<char>(rng.pick(26)); break;
                default: s.insert(pos, 1, s[pos]); break;            // duplication
            }
        }
        if (text::fold_key(s) != folded && !s.empty()) return s;
    }
    return key + "x";  // unreachable fallback
}

/// Initials or a folded prefix, extended until globally unique so that the
/// abbreviation rule keeps firing (salting with digits would not).
inline std::string abbreviate(Rng& rng, const std::vector<std::string>& words,
                              const std::set<std::string>& used) {
    if (rng.chance(50) && words.size() >= 2) {
        std::string initials;
        for (const auto& w : words) initials += w.front();
        if (!used.count(initials)) return text::upper(initials);
    }
    std::string folded = text::fold_key(camel(words));
    for (size_t len = 4; len < folded.size(); ++len) {
        std::string prefix = folded.substr(0, len);
        if (!used.count(prefix)) return prefix;
    }
    return folded;  // full folded key is unique by construction
}

inline std::string restyle(Rng& rng, const std::vector<std::string>& words,
                           const std::string& original) {
    for (int attempt = 0; attempt < 10; ++attempt) {
        std::string out;
        switch (rng.pick(4)) {
            case 0: out = text::upper(snake(words)); break;
            case 1: out = snake(words); break;
            case 2: out = text::upper(text::fold_key(camel(words))); break;
            default: out = text::fold_key(camel(words)); break;
        }
        if (out != original) return out;
    }
    return text::upper(snake(words));
}

}  // namespace forge_detail

class CorpusForge {
public:
    CorpusForge(uint64_t seed, CorpusProfile profile, int size, int faults)
        : rng_(seed), profile_(profile), size_(size), fault_count_(faults) {
        manifest_.seed = seed;
        manifest_.profile = to_string(profile);
        manifest_.size = size;
        for (auto c : {MatchCategory::exact, MatchCategory::spelling,
                       MatchCategory::abbreviation, MatchCategory::format,
                       MatchCategory::logical, MatchCategory::semantic})
            manifest_.category_counts[to_string(c)] = 0;
    }

    Corpus build() {
        if (size_ < 1) throw SchemaError("corpus size must be >= 1");
        for (int i = 0; i < size_; ++i) build_endpoint(i);
        seed_faults();
        Corpus corpus;
        corpus.spec = std::move(spec_);
        corpus.can_table = std::move(can_);
        corpus.vv_table = std::move(vv_);
        corpus.rig_config = std::move(rig_);
        corpus.manifest = std::move(manifest_);
        return corpus;
    }

private:
    using Rng = forge_detail::Rng;

    enum class PropPlanKind { enumeration, boolean, numeric, datetime };

    // Per-endpoint working state
    struct EndpointCtx {
        std::string path;
        std::string name;
        std::vector<Method> methods;
        Endpoint spec_ep;
        RigEndpointConfig rig_ep;
    };

    std::vector<std::string> fresh_words(size_t n) {
        for (int attempt = 0; attempt < 200; ++attempt) {
            std::vector<std::string> words;
            std::set<std::string> seen;
            while (words.size() < n) {
                const auto& w = rng_.choose(forge_detail::property_words());
                if (seen.insert(w).second) words.push_back(w);
            }
            std::string key = forge_detail::camel(words);
            if (used_keys_.insert(text::fold_key(key)).second) return words;
        }
        // exhausted combinations: salt with a counter
        std::vector<std::string> words = {forge_detail::property_words()[0],
                                          "x" + std::to_string(used_keys_.size())};
        used_keys_.insert(text::fold_key(forge_detail::camel(words)));
        return words;
    }

    std::string fresh_can_key(const std::string& candidate) {
        std::string key = candidate;
        int salt = 1;
        while (!used_can_keys_.insert(text::fold_key(key)).second)
            key = candidate + std::to_string(salt++);
        return key;
    }

    CorpusProfile endpoint_profile(int index) {
        if (profile_ != CorpusProfile::mixed) return profile_;
        static const CorpusProfile rotation[] = {
            CorpusProfile::clean, CorpusProfile::fuzzy5, CorpusProfile::pseudocode,
            CorpusProfile::units, CorpusProfile::dependencies};
        return rotation[index % 5];
    }

    void build_endpoint(int index) {
        EndpointCtx ctx;
        ctx.name = forge_detail::endpoint_words()[index %
                                                  forge_detail::endpoint_words().size()] +
                   std::to_string(index);
        ctx.path = "/" + ctx.name;
        CorpusProfile p = endpoint_profile(index);

        bool get_only = p == CorpusProfile::clean && rng_.chance(20);
        ctx.methods = get_only ? std::vector<Method>{Method::GET}
                               : std::vector<Method>{Method::PUT, Method::GET};
        ctx.spec_ep.path = ctx.path;
        ctx.spec_ep.methods = ctx.methods;
        ctx.rig_ep.path = ctx.path;
        ctx.rig_ep.methods = ctx.methods;

        switch (p) {
            case CorpusProfile::clean: {
                add_enum_property(ctx, MatchCategory::exact);
                if (get_only || rng_.chance(50)) add_numeric_property(ctx, UnitMode::same);
                if (!get_only && rng_.chance(50)) add_boolean_property(ctx, MatchCategory::exact);
                break;
            }
            case CorpusProfile::fuzzy5: {
                add_enum_property(ctx, MatchCategory::spelling);
                add_enum_property(ctx, MatchCategory::abbreviation);
                add_enum_property(ctx, MatchCategory::format);
                add_logical_property(ctx);
                add_semantic_property(ctx);
                if (rng_.chance(50)) add_distractor(ctx);
                break;
            }
            case CorpusProfile::pseudocode: {
                add_pseudocode_property(ctx);
                if (rng_.chance(40)) add_enum_property(ctx, MatchCategory::exact);
                break;
            }
            case CorpusProfile::units: {
                add_numeric_property(ctx, pick_unit_mode());
                if (rng_.chance(40)) add_numeric_property(ctx, pick_unit_mode());
                break;
            }
            case CorpusProfile::dependencies: {
                add_datetime_property(ctx);
                if (rng_.chance(40)) add_enum_property(ctx, MatchCategory::exact);
                break;
            }
            case CorpusProfile::mixed:
                break;  // unreachable: resolved per endpoint
        }
        if (profile_ == CorpusProfile::mixed && rng_.chance(25))
            add_unmappable_property(ctx);

        spec_.endpoints.push_back(ctx.spec_ep);
        rig_.endpoints.push_back(ctx.rig_ep);
    }

    // --- property builders -------------------------------------------------

    /// CAN key derived from the api key per perturbation category.
    std::string perturb_key(const std::string& api_key,
                            const std::vector<std::string>& words, MatchCategory category) {
        switch (category) {
            case MatchCategory::exact: return api_key;
            case MatchCategory::spelling: return forge_detail::spell_perturb(rng_, api_key);
            case MatchCategory::abbreviation:
                return forge_detail::abbreviate(rng_, words, used_can_keys_);
            case MatchCategory::format: return forge_detail::restyle(rng_, words, api_key);
            default: return api_key;
        }
    }

    void record_mapping(const EndpointCtx& ctx, const std::string& key,
                        MatchCategory category, const std::string& can_key,
                        const std::string& vv_key, bool covered = true) {
        manifest_.true_mappings.push_back({ctx.path, key, category, can_key, vv_key, covered});
        manifest_.category_counts[to_string(category)] += 1;
    }

    /// Explicitly bound entries carry a suffixed key; unbound entries keep a
    /// restyled form of the CAN key so fuzzy stage-2 resolution recovers them.
    std::string bind_vv(const std::string& can_key, bool explicit_binding) {
        std::string vv_key = explicit_binding ? can_key + "_vv" : text::upper(can_key);
        rig_.vv_bindings[can_key] = vv_key;
        rig_.vv_defaults[vv_key] = -1.0;  // never a valid encoded/converted value
        VvEntry entry;
        entry.key = vv_key;
        if (explicit_binding) entry.bound_can_key = can_key;
        vv_.entries.push_back(entry);
        return vv_key;
    }

    void emit_gt_cases(const EndpointCtx& ctx, const ApiProperty& prop,
                       const std::vector<std::pair<std::string, double>>& label_to_vv_raw,
                       const std::string& vv_key) {
        int idx = 0;
        for (const auto& [label, vv_raw] : label_to_vv_raw) {
            std::string token = render_api_value(prop, label);
            for (Method m : ctx.methods) {
                TestCase c;
                c.id = "gt:" + ctx.name + ":" + to_string(m) + ":" + prop.key + ":" +
                       std::to_string(idx);
                c.method = m;
                c.endpoint = ctx.path;
                if (m == Method::PUT) {
                    c.api_payload = {{prop.key, token}};
                    c.expected_vv = {{vv_key, vv_raw}};
                } else {
                    c.vv_preset = {{vv_key, vv_raw}};
                    c.expected_api = {{prop.key, token}};
                }
                manifest_.ground_truth_cases.push_back(std::move(c));
            }
            ++idx;
        }
    }

    void add_enum_property(EndpointCtx& ctx, MatchCategory category) {
        auto words = fresh_words(2 + rng_.pick(2));
        ApiProperty prop;
        prop.key = forge_detail::camel(words);
        size_t n_labels = 2 + rng_.pick(2);
        std::vector<std::string> labels;
        size_t offset = rng_.pick(forge_detail::enum_label_pool().size());
        for (size_t i = 0; i < n_labels; ++i)
            labels.push_back(forge_detail::enum_label_pool()[(offset + i) %
                                                             forge_detail::enum_label_pool().size()]);
        prop.declared_type = DeclaredType::enumeration;
        prop.domain = ValueDomain::enumeration(labels);
        ctx.spec_ep.properties.push_back(prop);

        finish_enum_like(ctx, prop, words, category, labels);
    }

    void add_boolean_property(EndpointCtx& ctx, MatchCategory category) {
        auto words = fresh_words(2);
        ApiProperty prop;
        prop.key = forge_detail::camel(words);
        prop.declared_type = DeclaredType::boolean;
        prop.domain = ValueDomain::boolean();
        ctx.spec_ep.properties.push_back(prop);

        finish_enum_like(ctx, prop, words, category, {"TRUE", "FALSE"});
    }

    void add_logical_property(EndpointCtx& ctx) {
        // key carries an antonym-lexicon token; the CAN side negates it
        auto words = fresh_words(2);
        std::string token = rng_.choose(forge_detail::antonym_tokens());
        words.insert(words.begin() + 1, token);
        std::string api_key = forge_detail::camel(words);
        if (!used_keys_.insert(text::fold_key(api_key)).second) {
            // collision with an existing key; salt the tail word
            words.back() += "x";
            api_key = forge_detail::camel(words);
            used_keys_.insert(text::fold_key(api_key));
        }

        ApiProperty prop;
        prop.key = api_key;
        prop.declared_type = DeclaredType::enumeration;
        std::vector<std::string> labels = {"STANDARD", "ECONOMY"};
        prop.domain = ValueDomain::enumeration(labels);
        ctx.spec_ep.properties.push_back(prop);

        std::string ant = *Lexicons::builtin().antonym_of(token);
        std::vector<std::string> can_words = words;
        can_words[1] = "not";
        can_words.insert(can_words.begin() + 2, ant);
        std::string can_key = forge_detail::camel(can_words);
        finish_enum_like(ctx, prop, words, MatchCategory::logical, labels, can_key);
    }

    void add_semantic_property(EndpointCtx& ctx) {
        const auto& pair = rng_.choose(forge_detail::semantic_pool());
        auto words = fresh_words(2);
        words.insert(words.begin(), pair.from);
        std::string api_key = forge_detail::camel(words);
        if (!used_keys_.insert(text::fold_key(api_key)).second) {
            words.back() += "x";
            api_key = forge_detail::camel(words);
            used_keys_.insert(text::fold_key(api_key));
        }

        ApiProperty prop;
        prop.key = api_key;
        prop.declared_type = DeclaredType::enumeration;
        std::vector<std::string> labels = {"HIGH", "LOW"};
        prop.domain = ValueDomain::enumeration(labels);
        ctx.spec_ep.properties.push_back(prop);

        std::vector<std::string> can_words = words;
        can_words[0] = pair.to;
        std::string can_key = forge_detail::camel(can_words);
        manifest_.semantic_total += 1;
        if (pair.in_lexicon) manifest_.semantic_in_lexicon += 1;
        finish_enum_like(ctx, prop, words, MatchCategory::semantic, labels, can_key,
                         pair.in_lexicon);
    }

    /// Shared tail of enum-like properties: CAN row, VV row, rig config,
    /// manifest entry and ground truth cases.
    void finish_enum_like(EndpointCtx& ctx, const ApiProperty& prop,
                          const std::vector<std::string>& words, MatchCategory category,
                          const std::vector<std::string>& labels,
                          std::string can_key_override = "", bool covered = true) {
        std::string can_key = can_key_override.empty()
                                  ? fresh_can_key(perturb_key(prop.key, words, category))
                                  : fresh_can_key(can_key_override);
        CanSignal sig;
        sig.key = can_key;
        sig.endpoint_hint = ctx.name;
        for (size_t i = 0; i < labels.size(); ++i)
            sig.encoding.entries.emplace_back(labels[i], static_cast<int64_t>(i));
        can_.signals.push_back(sig);

        bool explicit_binding = rng_.chance(50);
        std::string vv_key = bind_vv(can_key, explicit_binding);
        VvEntry& vv = vv_.entries.back();
        std::vector<std::pair<std::string, double>> label_to_vv_raw;
        RigPropertyConfig rig_prop;
        rig_prop.key = prop.key;
        rig_prop.kind = prop.declared_type == DeclaredType::boolean ? RigPropKind::boolean
                                                                    : RigPropKind::enumeration;
        rig_prop.can_key = can_key;
        for (size_t i = 0; i < labels.size(); ++i) {
            int64_t vv_raw = 10 + 2 * static_cast<int64_t>(i);
            vv.encoding.entries.emplace_back(labels[i], vv_raw);
            rig_prop.labels.push_back({labels[i], can_key, static_cast<int64_t>(i),
                                       static_cast<double>(vv_raw)});
            label_to_vv_raw.emplace_back(labels[i], static_cast<double>(vv_raw));
        }
        ctx.rig_ep.properties.push_back(rig_prop);

        record_mapping(ctx, prop.key, category, can_key, vv_key, covered);
        emit_gt_cases(ctx, prop, label_to_vv_raw, vv_key);
    }

    void add_pseudocode_property(EndpointCtx& ctx) {
        auto words = fresh_words(2);
        words.push_back("active");
        std::string api_key = forge_detail::camel(words);
        used_keys_.insert(text::fold_key(api_key));

        ApiProperty prop;
        prop.key = api_key;
        prop.declared_type = DeclaredType::boolean;
        prop.domain = ValueDomain::boolean();
        ctx.spec_ep.properties.push_back(prop);

        static const std::vector<std::string> weak_pool = {"Ringing", "Snoozed", "Armed",
                                                           "Triggered", "Engaged"};
        // key kept exact so the profile isolates alternative selection
        std::string can_key = fresh_can_key(api_key);
        size_t n_weak = 1 + rng_.pick(3);

        std::vector<std::string> alt_labels = {"Active"};
        std::vector<bool> valid = {true};
        size_t offset = rng_.pick(weak_pool.size());
        for (size_t i = 0; i < n_weak; ++i) {
            alt_labels.push_back(weak_pool[(offset + i) % weak_pool.size()]);
            valid.push_back(rng_.chance(70));
        }

        CanSignal sig;
        sig.key = can_key;
        sig.endpoint_hint = ctx.name;
        sig.encoding.entries.emplace_back("Inactive", 0);
        for (size_t i = 0; i < alt_labels.size(); ++i)
            sig.encoding.entries.emplace_back(alt_labels[i], static_cast<int64_t>(i + 1));
        PseudocodeAlternatives alts;
        for (const auto& l : alt_labels) alts.alternatives.emplace_back(can_key, l);
        sig.pseudocode = serialize_pseudocode(alts);
        can_.signals.push_back(sig);

        std::string vv_key = bind_vv(can_key, true);
        VvEntry& vv = vv_.entries.back();
        vv.encoding.entries.emplace_back("Inactive", 10);
        std::vector<std::pair<std::string, double>> label_to_vv_raw = {{"FALSE", 10.0}};
        for (size_t i = 0; i < alt_labels.size(); ++i)
            vv.encoding.entries.emplace_back(alt_labels[i], 12 + 2 * static_cast<int64_t>(i));

        RigPropertyConfig rig_prop;
        rig_prop.key = prop.key;
        rig_prop.kind = RigPropKind::boolean;
        rig_prop.can_key = can_key;
        // gateway realizes TRUE as the strong alternative, FALSE as Inactive
        rig_prop.labels.push_back({"TRUE", can_key, 1, 12.0});
        rig_prop.labels.push_back({"FALSE", can_key, 0, 10.0});
        ctx.rig_ep.properties.push_back(rig_prop);
        label_to_vv_raw.insert(label_to_vv_raw.begin(), {"TRUE", 12.0});

        manifest_.pseudo_chains.push_back({ctx.path, prop.key, "TRUE", alt_labels, valid});
        record_mapping(ctx, prop.key, MatchCategory::exact, can_key, vv_key);
        emit_gt_cases(ctx, prop, label_to_vv_raw, vv_key);
    }

    enum class UnitMode { same, convert, infer_description, borrow, missing };

    UnitMode pick_unit_mode() {
        size_t roll = rng_.pick(100);
        if (roll < 40) return UnitMode::convert;
        if (roll < 70) return UnitMode::infer_description;
        if (roll < 85) return UnitMode::borrow;
        return UnitMode::missing;
    }

    void add_numeric_property(EndpointCtx& ctx, UnitMode mode) {
        struct Dim {
            const char* api_alias;
            const char* table_alias;
            double min, max;
            const char* desc;
        };
        static const std::vector<Dim> dims = {
            {"km/h", "m/s", 0.0, 250.0, "in km/h"},
            {"kW", "W", 0.0, 500.0, "in kW"},
            {"min", "s", 0.0, 120.0, "in min"},
        };
        const Dim& dim = dims[rng_.pick(dims.size())];

        auto words = fresh_words(2);
        ApiProperty prop;
        prop.key = forge_detail::camel(words);
        prop.declared_type = DeclaredType::number;
        prop.domain = ValueDomain::numeric(dim.min, dim.max);

        const UnitRegistry& reg = UnitRegistry::builtin();
        Unit api_unit = reg.parse_unit(dim.api_alias);
        Unit table_unit = reg.parse_unit(dim.table_alias);

        std::string can_key = fresh_can_key(prop.key);
        CanSignal sig;
        sig.key = can_key;
        sig.endpoint_hint = ctx.name;

        Rational api_to_can{1, 1};
        bool unmappable = false;
        switch (mode) {
            case UnitMode::same:
                prop.unit_text = dim.api_alias;
                sig.unit_text = dim.api_alias;
                break;
            case UnitMode::convert:
                prop.unit_text = dim.api_alias;
                sig.unit_text = dim.table_alias;
                api_to_can = api_unit.scale_to_base.times(table_unit.scale_to_base.inverse());
                break;
            case UnitMode::infer_description:
                prop.description = "Value measured " + std::string(dim.desc);
                sig.unit_text = dim.table_alias;
                api_to_can = api_unit.scale_to_base.times(table_unit.scale_to_base.inverse());
                break;
            case UnitMode::borrow:
                // no API unit anywhere; truth keeps API==CAN so borrowing is right
                sig.unit_text = dim.table_alias;
                api_to_can = Rational{1, 1};
                break;
            case UnitMode::missing:
                unmappable = true;
                break;
        }
        ctx.spec_ep.properties.push_back(prop);
        can_.signals.push_back(sig);

        std::string vv_key = bind_vv(can_key, rng_.chance(50));
        if (sig.unit_text) vv_.entries.back().unit_text = sig.unit_text;  // VV in CAN units

        RigPropertyConfig rig_prop;
        rig_prop.key = prop.key;
        rig_prop.kind = RigPropKind::numeric;
        rig_prop.can_key = can_key;
        rig_prop.api_to_can = api_to_can;
        rig_prop.can_to_vv = Rational{1, 1};
        ctx.rig_ep.properties.push_back(rig_prop);

        if (unmappable) {
            manifest_.unmappable.push_back({ctx.path, prop.key, "missing_unit"});
            return;  // ground truth still defines the cases the tester cannot reach
        }
        record_mapping(ctx, prop.key, MatchCategory::exact, can_key, vv_key);

        const auto& d = prop.domain;
        double samples[] = {d.min, d.max, (d.min + d.max) / 2.0};
        int idx = 0;
        for (double v : samples) {
            double vv_raw = api_to_can.apply(v);
            for (Method m : ctx.methods) {
                TestCase c;
                c.id = "gt:" + ctx.name + ":" + to_string(m) + ":" + prop.key + ":" +
                       std::to_string(idx);
                c.method = m;
                c.endpoint = ctx.path;
                if (m == Method::PUT) {
                    c.api_payload = {{prop.key, text::format_double(v)}};
                    c.expected_vv = {{vv_key, vv_raw}};
                } else {
                    c.vv_preset = {{vv_key, vv_raw}};
                    c.expected_api = {{prop.key, text::format_double(v)}};
                }
                manifest_.ground_truth_cases.push_back(std::move(c));
            }
            ++idx;
        }
    }

    void add_datetime_property(EndpointCtx& ctx) {
        auto words = fresh_words(2);
        words.push_back("time");
        ApiProperty prop;
        prop.key = forge_detail::camel(words);
        used_keys_.insert(text::fold_key(prop.key));
        prop.declared_type = DeclaredType::datetime;
        prop.domain = ValueDomain::datetime();
        ctx.spec_ep.properties.push_back(prop);

        std::string hours_key = fresh_can_key(prop.key + "Hours");
        std::string minutes_key = fresh_can_key(prop.key + "Minutes");
        for (const auto& k : {hours_key, minutes_key}) {
            CanSignal sig;
            sig.key = k;
            sig.endpoint_hint = ctx.name;
            can_.signals.push_back(sig);
        }
        std::string hours_vv = bind_vv(hours_key, true);
        std::string minutes_vv = bind_vv(minutes_key, true);

        RigPropertyConfig rig_prop;
        rig_prop.key = prop.key;
        rig_prop.kind = RigPropKind::datetime;
        rig_prop.hours_can_key = hours_key;
        rig_prop.minutes_can_key = minutes_key;
        ctx.rig_ep.properties.push_back(rig_prop);

        record_mapping(ctx, prop.key, MatchCategory::exact, hours_key, hours_vv);

        GenConfig gen;
        int idx = 0;
        for (const auto& sample : gen.datetime_samples) {
            auto parts = decompose_datetime(sample, {{hours_vv, DtRole::hours},
                                                     {minutes_vv, DtRole::minutes}});
            for (Method m : ctx.methods) {
                TestCase c;
                c.id = "gt:" + ctx.name + ":" + to_string(m) + ":" + prop.key + ":" +
                       std::to_string(idx);
                c.method = m;
                c.endpoint = ctx.path;
                if (m == Method::PUT) {
                    c.api_payload = {{prop.key, sample}};
                    for (const auto& [k, v] : parts)
                        c.expected_vv.emplace_back(k, static_cast<double>(v));
                    std::sort(c.expected_vv.begin(), c.expected_vv.end());
                } else {
                    for (const auto& [k, v] : parts)
                        c.vv_preset.emplace_back(k, static_cast<double>(v));
                    std::sort(c.vv_preset.begin(), c.vv_preset.end());
                    c.expected_api = {{prop.key, sample}};
                }
                manifest_.ground_truth_cases.push_back(std::move(c));
            }
            ++idx;
        }
    }

    /// A property whose CAN row deliberately does not exist.
    void add_unmappable_property(EndpointCtx& ctx) {
        auto words = fresh_words(3);
        ApiProperty prop;
        prop.key = forge_detail::camel(words);
        prop.declared_type = DeclaredType::enumeration;
        prop.domain = ValueDomain::enumeration({"ALPHA", "BETA"});
        ctx.spec_ep.properties.push_back(prop);
        manifest_.unmappable.push_back({ctx.path, prop.key, "no_key_match"});
    }

    /// Noise row that matches nothing.
    void add_distractor(EndpointCtx& ctx) {
        std::string key = fresh_can_key("busReserved" + std::to_string(rng_.pick(1000)));
        CanSignal sig;
        sig.key = key;
        sig.endpoint_hint = ctx.name;
        sig.encoding.entries.emplace_back("RAW", 0);
        can_.signals.push_back(sig);
        bind_vv(key, true);
        vv_.entries.back().encoding.entries.emplace_back("RAW", 1);
    }

    // --- fault seeding ------------------------------------------------------

    void seed_faults() {
        if (fault_count_ <= 0) return;
        static const FaultKind kinds[] = {FaultKind::wrong_scale, FaultKind::swapped_enum,
                                          FaultKind::dead_signal, FaultKind::stale_state,
                                          FaultKind::wrong_unit};
        std::set<std::string> faulted;
        int planted = 0;
        for (int i = 0; planted < fault_count_ && i < fault_count_ * 20; ++i) {
            FaultKind kind = kinds[planted % 5];
            const RigEndpointConfig* target_ep = nullptr;
            const RigPropertyConfig* target_prop = nullptr;
            for (const auto& ep : rig_.endpoints) {
                if (faulted.count(ep.path)) continue;
                for (const auto& p : ep.properties) {
                    if (fault_fits(kind, ep, p)) {
                        target_ep = &ep;
                        target_prop = &p;
                        break;
                    }
                }
                if (target_ep) break;
            }
            if (!target_ep) {
                // no endpoint suits this kind; fall back to a detectable one
                kind = FaultKind::dead_signal;
                for (const auto& ep : rig_.endpoints) {
                    if (faulted.count(ep.path)) continue;
                    for (const auto& p : ep.properties) {
                        if (fault_fits(kind, ep, p)) {
                            target_ep = &ep;
                            target_prop = &p;
                            break;
                        }
                    }
                    if (target_ep) break;
                }
            }
            if (!target_ep) break;

            FaultSpec fault;
            fault.kind = kind;
            switch (kind) {
                case FaultKind::wrong_scale:
                    fault.target = target_ep->path;
                    fault.factor = 1000.0;
                    break;
                case FaultKind::swapped_enum:
                    fault.target = target_prop->can_key;
                    fault.label_a = target_prop->labels[0].api_label;
                    fault.label_b = target_prop->labels[1].api_label;
                    break;
                case FaultKind::dead_signal:
                case FaultKind::stale_state:
                case FaultKind::wrong_unit:
                    fault.target = target_prop->kind == RigPropKind::datetime
                                       ? target_prop->hours_can_key
                                       : target_prop->can_key;
                    break;
            }
            rig_.faults.push_back(fault);
            manifest_.faults.push_back(fault);
            manifest_.faulted_endpoints.push_back(target_ep->path);
            faulted.insert(target_ep->path);
            ++planted;
        }
    }

    bool is_mappable(const EndpointCtx&, const RigPropertyConfig&) const { return true; }

    bool fault_fits(FaultKind kind, const RigEndpointConfig& ep,
                    const RigPropertyConfig& p) const {
        // faults must land on properties the pipeline actually tests
        for (const auto& u : manifest_.unmappable)
            if (u.endpoint == ep.path && u.key == p.key) return false;
        bool has_get = false, has_put = false;
        for (Method m : ep.methods) {
            has_get |= m == Method::GET;
            has_put |= m == Method::PUT;
        }
        switch (kind) {
            case FaultKind::wrong_scale:
                return p.kind == RigPropKind::numeric && has_put;
            case FaultKind::wrong_unit:
                return p.kind == RigPropKind::numeric &&
                       !(p.api_to_can == Rational{1, 1}) && has_put;
            case FaultKind::swapped_enum:
                return (p.kind == RigPropKind::enumeration ||
                        p.kind == RigPropKind::boolean) &&
                       p.labels.size() >= 2 && has_put;
            case FaultKind::dead_signal:
                return p.kind != RigPropKind::datetime && has_put;
            case FaultKind::stale_state:
                return p.kind != RigPropKind::datetime && has_get;
        }
        return false;
    }

    Rng rng_;
    CorpusProfile profile_;
    int size_;
    int fault_count_;
    ApiSpec spec_;
    CanTable can_;
    VvTable vv_;
    RigConfig rig_;
    CorpusManifest manifest_;
    std::set<std::string> used_keys_;      // folded api property keys
    std::set<std::string> used_can_keys_;  // folded CAN keys
};

inline Corpus forge(uint64_t seed, CorpusProfile profile, int size, int faults = 0) {
    return CorpusForge(seed, profile, size, faults).build();
}

// --- manifest JSON bindings ---

inline void to_json(json& j, const TrueMapping& m) {
    j = json{{"endpoint", m.endpoint},
             {"key", m.key},
             {"category", to_string(m.category)},
             {"can_key", m.can_key},
             {"vv_key", m.vv_key},
             {"covered_by_lexicon", m.covered_by_lexicon}};
}
inline void from_json(const json& j, TrueMapping& m) {
    m.endpoint = j.at("endpoint").get<std::string>();
    m.key = j.at("key").get<std::string>();
    m.category = category_from_string(j.at("category").get<std::string>());
    m.can_key = j.at("can_key").get<std::string>();
    m.vv_key = j.at("vv_key").get<std::string>();
    m.covered_by_lexicon = j.at("covered_by_lexicon").get<bool>();
}

inline void to_json(json& j, const PseudoChain& c) {
    j = json{{"endpoint", c.endpoint},
             {"key", c.key},
             {"api_label", c.api_label},
             {"alt_labels", c.alt_labels},
             {"valid", c.valid}};
}
inline void from_json(const json& j, PseudoChain& c) {
    c.endpoint = j.at("endpoint").get<std::string>();
    c.key = j.at("key").get<std::string>();
    c.api_label = j.at("api_label").get<std::string>();
    c.alt_labels = j.at("alt_labels").get<std::vector<std::string>>();
    c.valid = j.at("valid").get<std::vector<bool>>();
}

inline void to_json(json& j, const UnmappableEntry& u) {
    j = json{{"endpoint", u.endpoint}, {"key", u.key}, {"reason", u.reason}};
}
inline void from_json(const json& j, UnmappableEntry& u) {
    u.endpoint = j.at("endpoint").get<std::string>();
    u.key = j.at("key").get<std::string>();
    u.reason = j.at("reason").get<std::string>();
}

inline void to_json(json& j, const CorpusManifest& m) {
    j = json{{"seed", m.seed},
             {"profile", m.profile},
             {"size", m.size},
             {"true_mappings", m.true_mappings},
             {"pseudo_chains", m.pseudo_chains},
             {"unmappable", m.unmappable},
             {"faults", m.faults},
             {"faulted_endpoints", m.faulted_endpoints},
             {"ground_truth_cases", m.ground_truth_cases},
             {"category_counts", m.category_counts},
             {"semantic_total", m.semantic_total},
             {"semantic_in_lexicon", m.semantic_in_lexicon}};
}
inline void from_json(const json& j, CorpusManifest& m) {
    m.seed = j.at("seed").get<uint64_t>();
    m.profile = j.at("profile").get<std::string>();
    m.size = j.at("size").get<int>();
    m.true_mappings = j.at("true_mappings").get<std::vector<TrueMapping>>();
    m.pseudo_chains = j.at("pseudo_chains").get<std::vector<PseudoChain>>();
    m.unmappable = j.at("unmappable").get<std::vector<UnmappableEntry>>();
    m.faults = j.at("faults").get<std::vector<FaultSpec>>();
    m.faulted_endpoints = j.at("faulted_endpoints").get<std::vector<std::string>>();
    m.ground_truth_cases = j.at("ground_truth_cases").get<std::vector<TestCase>>();
    m.category_counts = j.at("category_counts").get<std::map<std::string, int>>();
    m.semantic_total = j.at("semantic_total").get<int>();
    m.semantic_in_lexicon = j.at("semantic_in_lexicon").get<int>();
}

/// Writes api_spec.json, can_table.txt, vv_table.txt, rig_config.json and
/// manifest.rec into `dir`.
inline void write_corpus(const Corpus& corpus, const std::string& dir) {
    io::ensure_dir(dir);
    io::write_file(dir + "/api_spec.json", serialize_spec(corpus.spec));
    io::write_file(dir + "/can_table.txt", serialize_can_table(corpus.can_table));
    io::write_file(dir + "/vv_table.txt", serialize_vv_table(corpus.vv_table));
    json rig = corpus.rig_config;
    io::write_file(dir + "/rig_config.json", rig.dump(2) + "\n");
    json manifest = corpus.manifest;
    io::write_file(dir + "/manifest.rec", manifest.dump(2) + "\n");
}

inline CorpusManifest load_manifest(const std::string& path) {
    try {
        return json::parse(io::read_file(path)).get<CorpusManifest>();
    } catch (const nlohmann::json::exception& e) {
        throw ManifestMismatch(std::string("manifest parse: ") + e.what());
    }
}

// --- manifest scoring ---

struct CategoryScore {
    int tp = 0, fp = 0, fn = 0;

    // empty prediction sets have vacuously perfect precision (the strict end
    // of the precision/recall tradeoff)
    double precision() const { return tp + fp == 0 ? 1.0 : double(tp) / (tp + fp); }
    double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / (tp + fn); }
    double f1() const {
        double p = precision(), r = recall();
        return p + r == 0.0 ? 0.0 : 2 * p * r / (p + r);
    }
};

struct ManifestScores {
    std::map<std::string, CategoryScore> per_category;  // fuzzy category name
    CategoryScore overall;
    CategoryScore pseudocode;  // alternative selection, when chains exist
    double semantic_lexicon_coverage = 1.0;
};

/// Per-category key-pair recovery plus pseudocode alternative selection,
/// scored exactly as set intersections against the manifest.
inline ManifestScores score_against_manifest(const std::vector<MatchResult>& results,
                                             const CorpusManifest& manifest) {
    ManifestScores scores;
    for (const auto& [cat, count] : manifest.category_counts)
        scores.per_category[cat];  // materialize

    // one representative result per (endpoint, property)
    std::map<std::pair<std::string, std::string>, const MatchResult*> by_prop;
    for (const auto& r : results) {
        auto key = std::make_pair(r.endpoint, r.property.key);
        auto it = by_prop.find(key);
        if (it == by_prop.end() || r.method == Method::PUT) by_prop[key] = &r;
    }

    std::map<std::pair<std::string, std::string>, const TrueMapping*> truth;
    for (const auto& m : manifest.true_mappings)
        truth[std::make_pair(m.endpoint, m.key)] = &m;
    std::set<std::pair<std::string, std::string>> known_unmappable;
    for (const auto& u : manifest.unmappable)
        known_unmappable.insert({u.endpoint, u.key});

    for (const auto& [key, result] : by_prop) {
        auto it = truth.find(key);
        if (it == truth.end()) {
            if (known_unmappable.count(key)) {
                scores.overall.fp += 1;  // matched something the truth says is unmappable
                continue;
            }
            throw ManifestMismatch("result for unknown property " + key.first + "#" +
                                   key.second);
        }
        const TrueMapping& tm = *it->second;
        auto& cat = scores.per_category[to_string(tm.category)];
        if (result->can_key == tm.can_key) {
            cat.tp += 1;
            scores.overall.tp += 1;
        } else {
            cat.fp += 1;
            cat.fn += 1;
            scores.overall.fp += 1;
            scores.overall.fn += 1;
        }
    }
    for (const auto& [key, tm] : truth) {
        if (!by_prop.count(key)) {
            scores.per_category[to_string(tm->category)].fn += 1;
            scores.overall.fn += 1;
        }
    }

    // pseudocode alternative selections
    for (const auto& chain : manifest.pseudo_chains) {
        auto it = by_prop.find({chain.endpoint, chain.key});
        std::set<std::string> selected;
        if (it != by_prop.end()) {
            for (const auto& [l, r] : it->second->values_api_to_can.pairs) {
                if (l != chain.api_label) continue;
                for (const auto& alt : chain.alt_labels)
                    if (alt == r) selected.insert(r);
            }
        }
        for (size_t i = 0; i < chain.alt_labels.size(); ++i) {
            bool picked = selected.count(chain.alt_labels[i]) > 0;
            if (picked && chain.valid[i]) scores.pseudocode.tp += 1;
            if (picked && !chain.valid[i]) scores.pseudocode.fp += 1;
            if (!picked && chain.valid[i]) scores.pseudocode.fn += 1;
        }
    }

    scores.semantic_lexicon_coverage =
        manifest.semantic_total == 0
            ? 1.0
            : static_cast<double>(manifest.semantic_in_lexicon) / manifest.semantic_total;
    return scores;
}

}  // namespace vapitest
