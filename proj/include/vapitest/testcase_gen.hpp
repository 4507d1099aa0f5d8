// SPDX-License-Identifier: Apache-2.0
#pragma once

// Turns completed match chains into executable PUT and GET test cases and
// renders them into the line-oriented plan format:
//
//   <case-id> PUT <endpoint> <key=value;key=value>
//   <case-id> GET <endpoint>
//   <case-id> VV_SET <vv-key> <raw>
//   <case-id> VV_EXPECT <vv-key> <raw>
//   <case-id> API_EXPECT <key> <value>
//
// one step per line, '#' comments, '@rig <address>' in the setup section.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vapitest/errors.hpp"
#include "vapitest/matching.hpp"
#include "vapitest/text.hpp"

namespace vapitest {

struct TestCase {
    std::string id;
    Method method = Method::PUT;
    std::string endpoint;
    std::vector<std::pair<std::string, std::string>> api_payload;   // PUT
    std::vector<std::pair<std::string, double>> vv_preset;          // GET
    std::vector<std::pair<std::string, double>> expected_vv;        // PUT
    std::vector<std::pair<std::string, std::string>> expected_api;  // GET
    std::vector<std::string> provenance;                            // MatchResult ids

    bool operator==(const TestCase&) const = default;
};

/// API value tokens in payloads and plans: 'true'/'false' for booleans,
/// shortest-round-trip decimals for numbers, bare text for labels and HH:MM.
inline std::string render_api_value(const ApiProperty& p, const std::string& label) {
    if (p.domain.kind == DomainKind::boolean) return label == "TRUE" ? "true" : "false";
    return label;
}

inline std::pair<int64_t, int64_t> parse_hhmm(const std::string& value) {
    auto fail = [&] { throw SyntaxError("expected HH:MM, got '" + value + "'"); };
    if (value.size() != 5 || value[2] != ':') fail();
    for (size_t i : {0u, 1u, 3u, 4u})
        if (!std::isdigit(static_cast<unsigned char>(value[i]))) fail();
    int64_t h = (value[0] - '0') * 10 + (value[1] - '0');
    int64_t m = (value[3] - '0') * 10 + (value[4] - '0');
    if (h > 23 || m > 59) fail();
    return {h, m};
}

inline std::string format_hhmm(int64_t hours, int64_t minutes) {
    char buf[6];
    std::snprintf(buf, sizeof(buf), "%02d:%02d", static_cast<int>(hours),
                  static_cast<int>(minutes));
    return std::string(buf);
}

/// Splits an HH:MM value onto its hour/minute targets.
inline std::map<std::string, int64_t> decompose_datetime(
    const std::string& value, const std::vector<std::pair<std::string, DtRole>>& targets) {
    auto [h, m] = parse_hhmm(value);
    const std::string* hours_key = nullptr;
    const std::string* minutes_key = nullptr;
    for (const auto& [key, role] : targets)
        (role == DtRole::hours ? hours_key : minutes_key) = &key;
    if (!hours_key) throw RoleMissing("no hours target");
    if (!minutes_key) throw RoleMissing("no minutes target");
    return {{*hours_key, h}, {*minutes_key, m}};
}

struct GenConfig {
    // numeric properties sample {min, max, midpoint}; datetimes sample these
    std::vector<std::string> datetime_samples = {"00:00", "23:59", "07:45"};
};

namespace gen_detail {

inline std::string slug(const std::string& endpoint) {
    std::string s;
    for (char c : endpoint)
        if (c != '/') s += c;
    return s.empty() ? "root" : s;
}

inline std::string case_id(const MatchResult& r, int index) {
    return gen_detail::slug(r.endpoint) + ":" + to_string(r.method) + ":" +
           r.property.key + ":" + std::to_string(index);
}

/// A case must never assign two different raw values to one VV key.
inline bool internally_consistent(const TestCase& c) {
    auto check = [](const std::vector<std::pair<std::string, double>>& kv) {
        for (size_t i = 0; i < kv.size(); ++i)
            for (size_t j = i + 1; j < kv.size(); ++j)
                if (kv[i].first == kv[j].first && kv[i].second != kv[j].second) return false;
        return true;
    };
    return check(c.vv_preset) && check(c.expected_vv);
}

}  // namespace gen_detail

/// One PUT or GET case per value sample per property; inter-dependent
/// datetime targets are generated jointly. Ungenerable attributes come back
/// as Skipped entries, never dropped silently.
inline std::pair<std::vector<TestCase>, std::vector<Skipped>> generate_test_cases(
    const std::vector<MatchResult>& results, const GenConfig& config = {}) {
    std::vector<TestCase> cases;
    std::vector<Skipped> skipped;

    // group datetime roles per property; everything else is a singleton
    std::vector<std::vector<const MatchResult*>> groups;
    std::map<std::string, size_t> dt_group;
    for (const auto& r : results) {
        if (r.role) {
            std::string gkey = r.endpoint + "|" + to_string(r.method) + "|" + r.property.key;
            auto it = dt_group.find(gkey);
            if (it == dt_group.end()) {
                dt_group[gkey] = groups.size();
                groups.push_back({&r});
            } else {
                groups[it->second].push_back(&r);
            }
        } else {
            groups.push_back({&r});
        }
    }

    for (const auto& group : groups) {
        const MatchResult& head = *group.front();
        std::vector<TestCase> generated;
        std::string failure;

        if (head.role) {
            const MatchResult* hours = nullptr;
            const MatchResult* minutes = nullptr;
            for (const auto* r : group)
                (*r->role == DtRole::hours ? hours : minutes) = r;
            if (!hours || !minutes) {
                failure = "datetime_roles_incomplete";
            } else {
                for (size_t i = 0; i < config.datetime_samples.size(); ++i) {
                    const std::string& sample = config.datetime_samples[i];
                    auto parts = decompose_datetime(
                        sample, {{hours->vv_key, DtRole::hours},
                                 {minutes->vv_key, DtRole::minutes}});
                    TestCase c;
                    c.id = gen_detail::case_id(head, static_cast<int>(i));
                    c.method = head.method;
                    c.endpoint = head.endpoint;
                    c.provenance = {hours->id, minutes->id};
                    if (head.method == Method::PUT) {
                        c.api_payload = {{head.property.key, sample}};
                        for (const auto& [k, v] : parts)
                            c.expected_vv.emplace_back(k, static_cast<double>(v));
                        std::sort(c.expected_vv.begin(), c.expected_vv.end());
                    } else {
                        for (const auto& [k, v] : parts)
                            c.vv_preset.emplace_back(k, static_cast<double>(v));
                        std::sort(c.vv_preset.begin(), c.vv_preset.end());
                        c.expected_api = {{head.property.key, sample}};
                    }
                    generated.push_back(std::move(c));
                }
            }
        } else if (head.property.domain.kind == DomainKind::numeric_range) {
            if (!head.conversion) {
                failure = "missing_conversion";
            } else {
                const auto& d = head.property.domain;
                double samples[] = {d.min, d.max, (d.min + d.max) / 2.0};
                for (int i = 0; i < 3; ++i) {
                    double v = samples[i];
                    double vv_raw = head.conversion->apply_api_to_vv(v);
                    TestCase c;
                    c.id = gen_detail::case_id(head, i);
                    c.method = head.method;
                    c.endpoint = head.endpoint;
                    c.provenance = {head.id};
                    if (head.method == Method::PUT) {
                        c.api_payload = {{head.property.key, text::format_double(v)}};
                        c.expected_vv = {{head.vv_key, vv_raw}};
                    } else {
                        c.vv_preset = {{head.vv_key, vv_raw}};
                        c.expected_api = {{head.property.key, text::format_double(v)}};
                    }
                    generated.push_back(std::move(c));
                }
            }
        } else {
            // enumeration / boolean: one case per resolved value
            if (head.chain.empty()) failure = "empty_value_chain";
            for (size_t i = 0; i < head.chain.size(); ++i) {
                const ChainValue& cv = head.chain[i];
                TestCase c;
                c.id = gen_detail::case_id(head, static_cast<int>(i));
                c.method = head.method;
                c.endpoint = head.endpoint;
                c.provenance = {head.id};
                std::string token = render_api_value(head.property, cv.api_label);
                if (head.method == Method::PUT) {
                    c.api_payload = {{head.property.key, token}};
                    c.expected_vv = {{cv.vv_key, static_cast<double>(cv.vv_raw)}};
                } else {
                    c.vv_preset = {{cv.vv_key, static_cast<double>(cv.vv_raw)}};
                    c.expected_api = {{head.property.key, token}};
                }
                generated.push_back(std::move(c));
            }
        }

        for (const auto& c : generated) {
            if (!gen_detail::internally_consistent(c)) {
                failure = "shared_signal_conflict";
                break;
            }
        }
        if (failure.empty() && !generated.empty()) {
            for (auto& c : generated) cases.push_back(std::move(c));
        } else {
            skipped.push_back({head.endpoint, head.method, head.property.key, "generation",
                               failure.empty() ? "no_cases" : failure});
        }
    }
    return {cases, skipped};
}

// --- plan rendering (pure text substitution, one template per method) ---

namespace plan_detail {

inline constexpr std::string_view kPutStep = "{id} PUT {endpoint} {payload}\n";
inline constexpr std::string_view kVvExpectStep = "{id} VV_EXPECT {key} {raw}\n";
inline constexpr std::string_view kVvSetStep = "{id} VV_SET {key} {raw}\n";
inline constexpr std::string_view kGetStep = "{id} GET {endpoint}\n";
inline constexpr std::string_view kApiExpectStep = "{id} API_EXPECT {key} {value}\n";

inline std::string substitute(std::string_view tmpl,
                              const std::vector<std::pair<std::string, std::string>>& vars) {
    std::string out(tmpl);
    for (const auto& [name, value] : vars) {
        std::string placeholder = "{" + name + "}";
        size_t pos;
        while ((pos = out.find(placeholder)) != std::string::npos)
            out.replace(pos, placeholder.size(), value);
    }
    return out;
}

inline std::string payload_record(
    const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string out;
    for (size_t i = 0; i < kv.size(); ++i) {
        if (i) out += ';';
        out += kv[i].first + "=" + kv[i].second;
    }
    return out;
}

}  // namespace plan_detail

inline std::string render_test_plan(const std::vector<TestCase>& cases,
                                    const std::string& rig_address = "auto") {
    using namespace plan_detail;
    std::string out = "# vapitest plan v1\n@rig " + rig_address + "\n";
    for (const auto& c : cases) {
        if (c.method == Method::PUT) {
            out += substitute(kPutStep, {{"id", c.id},
                                         {"endpoint", c.endpoint},
                                         {"payload", payload_record(c.api_payload)}});
            for (const auto& [key, raw] : c.expected_vv)
                out += substitute(kVvExpectStep,
                                  {{"id", c.id}, {"key", key}, {"raw", text::format_double(raw)}});
        } else {
            for (const auto& [key, raw] : c.vv_preset)
                out += substitute(kVvSetStep,
                                  {{"id", c.id}, {"key", key}, {"raw", text::format_double(raw)}});
            out += substitute(kGetStep, {{"id", c.id}, {"endpoint", c.endpoint}});
            for (const auto& [key, value] : c.expected_api)
                out += substitute(kApiExpectStep,
                                  {{"id", c.id}, {"key", key}, {"value", value}});
        }
    }
    return out;
}

enum class StepVerb { put, get, vv_set, vv_expect, api_expect };

struct PlanStep {
    std::string case_id;
    StepVerb verb = StepVerb::put;
    std::string endpoint;                                        // PUT/GET
    std::vector<std::pair<std::string, std::string>> payload;    // PUT
    std::string key;                                             // VV_*/API_EXPECT
    double raw = 0.0;                                            // VV_*
    std::string value;                                           // API_EXPECT
};

struct PlanCase {
    std::string id;
    std::vector<PlanStep> steps;
};

struct TestPlan {
    std::string rig_address = "auto";
    std::vector<PlanCase> cases;  // first-appearance order
};

inline TestPlan parse_test_plan(std::string_view document) {
    TestPlan plan;
    std::map<std::string, size_t> case_index;
    size_t line_no = 0;
    for (const auto& raw_line : text::split(document, '\n')) {
        ++line_no;
        auto line = text::trim(raw_line);
        if (line.empty() || line.front() == '#') continue;
        auto fail = [&](const std::string& why) {
            throw SyntaxError("plan line " + std::to_string(line_no) + ": " + why);
        };
        if (line.front() == '@') {
            auto fields = text::split(line, ' ');
            if (fields[0] == "@rig" && fields.size() == 2) plan.rig_address = fields[1];
            continue;
        }
        std::vector<std::string> tok;
        for (const auto& t : text::split(line, ' '))
            if (!text::trim(t).empty()) tok.emplace_back(text::trim(t));
        if (tok.size() < 2) fail("too few tokens");

        PlanStep step;
        step.case_id = tok[0];
        const std::string& verb = tok[1];
        if (verb == "PUT") {
            if (tok.size() != 4) fail("PUT needs endpoint and payload");
            step.verb = StepVerb::put;
            step.endpoint = tok[2];
            for (const auto& entry : text::split(tok[3], ';')) {
                auto eq = entry.find('=');
                if (eq == std::string::npos) fail("payload entry lacks '='");
                step.payload.emplace_back(entry.substr(0, eq), entry.substr(eq + 1));
            }
        } else if (verb == "GET") {
            if (tok.size() != 3) fail("GET needs endpoint");
            step.verb = StepVerb::get;
            step.endpoint = tok[2];
        } else if (verb == "VV_SET" || verb == "VV_EXPECT") {
            if (tok.size() != 4) fail(verb + " needs key and raw");
            step.verb = verb == "VV_SET" ? StepVerb::vv_set : StepVerb::vv_expect;
            step.key = tok[2];
            if (!text::parse_double(tok[3], step.raw)) fail("bad raw value");
        } else if (verb == "API_EXPECT") {
            if (tok.size() != 4) fail("API_EXPECT needs key and value");
            step.verb = StepVerb::api_expect;
            step.key = tok[2];
            step.value = tok[3];
        } else {
            fail("unknown verb '" + verb + "'");
        }

        auto it = case_index.find(step.case_id);
        if (it == case_index.end()) {
            case_index[step.case_id] = plan.cases.size();
            plan.cases.push_back({step.case_id, {std::move(step)}});
        } else {
            plan.cases[it->second].steps.push_back(std::move(step));
        }
    }
    return plan;
}

// --- JSON bindings for cases.rec ---

inline void to_json(json& j, const TestCase& c) {
    auto pairs_to_json = [](const auto& kv) {
        json out = json::array();
        for (const auto& [k, v] : kv) out.push_back(json::array({k, v}));
        return out;
    };
    j = json{{"id", c.id},
             {"method", to_string(c.method)},
             {"endpoint", c.endpoint},
             {"api_payload", pairs_to_json(c.api_payload)},
             {"vv_preset", pairs_to_json(c.vv_preset)},
             {"expected_vv", pairs_to_json(c.expected_vv)},
             {"expected_api", pairs_to_json(c.expected_api)},
             {"provenance", c.provenance}};
}

inline void from_json(const json& j, TestCase& c) {
    c = TestCase{};
    c.id = j.at("id").get<std::string>();
    c.method = method_from_string(j.at("method").get<std::string>());
    c.endpoint = j.at("endpoint").get<std::string>();
    for (const auto& p : j.at("api_payload"))
        c.api_payload.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    for (const auto& p : j.at("vv_preset"))
        c.vv_preset.emplace_back(p[0].get<std::string>(), p[1].get<double>());
    for (const auto& p : j.at("expected_vv"))
        c.expected_vv.emplace_back(p[0].get<std::string>(), p[1].get<double>());
    for (const auto& p : j.at("expected_api"))
        c.expected_api.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    c.provenance = j.at("provenance").get<std::vector<std::string>>();
}

}  // namespace vapitest
