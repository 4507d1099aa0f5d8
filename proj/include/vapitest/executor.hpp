// SPDX-License-Identifier: Apache-2.0
#pragma once

// Plan execution against a rig, verdict tracking, metrics, and the two report
// formats (report.rec machine record, report.txt human text).

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vapitest/errors.hpp"
#include "vapitest/matching.hpp"
#include "vapitest/rig_server.hpp"
#include "vapitest/testcase_gen.hpp"
#include "vapitest/text.hpp"

namespace vapitest {

inline constexpr double kNumericTolerance = 1e-6;  // absolute, post-conversion

enum class Verdict { pass, fail, error };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::error: return "error";
    }
    return "?";
}

inline Verdict verdict_from_string(std::string_view s) {
    if (s == "pass") return Verdict::pass;
    if (s == "fail") return Verdict::fail;
    if (s == "error") return Verdict::error;
    throw SchemaError("unknown verdict '" + std::string(s) + "'");
}

struct FailedAssertion {
    std::string key;
    std::string expected;
    std::string actual;

    bool operator==(const FailedAssertion&) const = default;
};

struct TestOutcome {
    std::string case_id;
    Verdict verdict = Verdict::pass;
    std::vector<FailedAssertion> failed_assertions;
    std::string log;

    bool operator==(const TestOutcome&) const = default;
};

struct ApiVerdict {
    std::string endpoint;
    Method method = Method::GET;
    bool passed = false;  // true iff every case outcome passed
    std::vector<TestOutcome> case_outcomes;

    bool operator==(const ApiVerdict&) const = default;
};

struct Metrics {
    double pass_rate = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool has_ground_truth = false;

    bool operator==(const Metrics&) const = default;
};

struct StageTimings {
    int64_t ingest_ms = 0;
    int64_t match_ms = 0;
    int64_t gen_ms = 0;
    int64_t run_ms = 0;
    int64_t total_ms = 0;

    bool operator==(const StageTimings&) const = default;
};

struct MatchSummary {
    std::string id;
    std::string endpoint;
    Method method = Method::GET;
    std::string property_key;
    std::string can_key;
    std::string vv_key;
    MatchCategory stage1_category = MatchCategory::none;
    double stage1_score = 0.0;
    MatchCategory stage2_category = MatchCategory::none;
    double stage2_score = 0.0;
    int value_pairs = 0;
    std::string conversion;
    std::string role;

    bool operator==(const MatchSummary&) const = default;
};

struct RunReport {
    std::string rig_address;
    std::string backend;
    std::string strictness;
    std::vector<ApiVerdict> verdicts;
    std::vector<std::string> errored_apis;  // "<METHOD> <path>" with only infra errors
    std::vector<Skipped> skipped;
    std::vector<MatchSummary> matches;
    Metrics metrics;
    std::vector<CanFrame> can_log;  // leading excerpt of the trace
    StageTimings timings;

    bool operator==(const RunReport&) const = default;
};

namespace exec_detail {

inline std::string render_json_value(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return text::format_double(v.get<double>());
    return v.dump();
}

inline bool tokens_equal(const std::string& expected, const std::string& actual) {
    double de, da;
    if (text::parse_double(expected, de) && text::parse_double(actual, da))
        return std::fabs(de - da) <= kNumericTolerance;
    return expected == actual;
}

}  // namespace exec_detail

/// Executes one parsed plan case. PUT cases send the payload and compare the
/// VV table through the admin route; GET cases preset VV states and compare
/// the API response. Infrastructure failures are errors, never failures.
inline TestOutcome run_case(const PlanCase& pc, RigPort& port) {
    TestOutcome outcome;
    outcome.case_id = pc.id;
    std::ostringstream log;
    json last_get_body;
    bool have_get = false;
    try {
        for (const auto& step : pc.steps) {
            switch (step.verb) {
                case StepVerb::vv_set:
                    port.vv_set(step.key, step.raw);
                    log << "VV_SET " << step.key << "=" << text::format_double(step.raw)
                        << "\n";
                    break;
                case StepVerb::put: {
                    json payload = json::object();
                    for (const auto& [k, v] : step.payload) {
                        double num;
                        if (v == "true")
                            payload[k] = true;
                        else if (v == "false")
                            payload[k] = false;
                        else if (text::parse_double(v, num))
                            payload[k] = num;
                        else
                            payload[k] = v;
                    }
                    Rig::ApiResult r = port.api_put(step.endpoint, payload);
                    log << "PUT " << step.endpoint << " -> " << r.status << "\n";
                    if (r.status != 200)
                        outcome.failed_assertions.push_back(
                            {"http_status", "200", std::to_string(r.status)});
                    break;
                }
                case StepVerb::get: {
                    Rig::ApiResult r = port.api_get(step.endpoint);
                    log << "GET " << step.endpoint << " -> " << r.status << "\n";
                    if (r.status != 200) {
                        outcome.failed_assertions.push_back(
                            {"http_status", "200", std::to_string(r.status)});
                    } else {
                        last_get_body = r.body;
                        have_get = true;
                    }
                    break;
                }
                case StepVerb::vv_expect: {
                    double actual = port.vv_get(step.key);
                    if (std::fabs(actual - step.raw) > kNumericTolerance)
                        outcome.failed_assertions.push_back({step.key,
                                                             text::format_double(step.raw),
                                                             text::format_double(actual)});
                    log << "VV_EXPECT " << step.key << " want "
                        << text::format_double(step.raw) << " got "
                        << text::format_double(actual) << "\n";
                    break;
                }
                case StepVerb::api_expect: {
                    std::string actual = "<absent>";
                    if (have_get && last_get_body.is_object() &&
                        last_get_body.contains(step.key))
                        actual = exec_detail::render_json_value(last_get_body[step.key]);
                    if (!exec_detail::tokens_equal(step.value, actual))
                        outcome.failed_assertions.push_back({step.key, step.value, actual});
                    log << "API_EXPECT " << step.key << " want " << step.value << " got "
                        << actual << "\n";
                    break;
                }
            }
        }
        outcome.verdict = outcome.failed_assertions.empty() ? Verdict::pass : Verdict::fail;
    } catch (const Error& e) {
        outcome.verdict = Verdict::error;
        log << "error: " << e.what() << "\n";
    }
    outcome.log = log.str();
    return outcome;
}

inline std::vector<TestOutcome> run_plan(const TestPlan& plan, RigPort& port) {
    std::vector<TestOutcome> outcomes;
    for (const auto& pc : plan.cases) outcomes.push_back(run_case(pc, port));
    return outcomes;
}

/// Groups case outcomes to API-level verdicts. An API passes iff every case
/// passes; APIs whose cases only erred go to the errored list and never count
/// as failures.
inline std::pair<std::vector<ApiVerdict>, std::vector<std::string>> group_verdicts(
    const TestPlan& plan, const std::vector<TestOutcome>& outcomes) {
    std::map<std::string, TestOutcome> by_id;
    for (const auto& o : outcomes) by_id[o.case_id] = o;

    std::vector<std::pair<std::string, Method>> order;  // first-appearance
    std::map<std::string, std::vector<TestOutcome>> grouped;
    for (const auto& pc : plan.cases) {
        std::string endpoint;
        Method method = Method::GET;
        for (const auto& s : pc.steps) {
            if (s.verb == StepVerb::put) {
                endpoint = s.endpoint;
                method = Method::PUT;
            }
            if (s.verb == StepVerb::get && endpoint.empty()) {
                endpoint = s.endpoint;
                method = Method::GET;
            }
        }
        if (endpoint.empty()) continue;
        std::string api = to_string(method) + " " + endpoint;
        if (!grouped.count(api)) order.emplace_back(endpoint, method);
        auto it = by_id.find(pc.id);
        if (it != by_id.end()) grouped[api].push_back(it->second);
    }

    std::vector<ApiVerdict> verdicts;
    std::vector<std::string> errored;
    for (const auto& [endpoint, method] : order) {
        std::string api = to_string(method) + " " + endpoint;
        const auto& cases = grouped[api];
        bool any_fail = false, any_error = false, all_pass = true;
        for (const auto& c : cases) {
            any_fail |= c.verdict == Verdict::fail;
            any_error |= c.verdict == Verdict::error;
            all_pass &= c.verdict == Verdict::pass;
        }
        if (any_error && !any_fail) {
            errored.push_back(api);
            continue;
        }
        ApiVerdict v;
        v.endpoint = endpoint;
        v.method = method;
        v.passed = all_pass;
        v.case_outcomes = cases;
        verdicts.push_back(std::move(v));
    }
    return {verdicts, errored};
}

/// Proportion of APIs whose cases all pass.
inline double pass_rate(const std::vector<ApiVerdict>& verdicts) {
    if (verdicts.empty()) throw EmptyInput("no API verdicts");
    size_t passes = 0;
    for (const auto& v : verdicts) passes += v.passed ? 1 : 0;
    return static_cast<double>(passes) / static_cast<double>(verdicts.size());
}

/// Canonical case signature: endpoint, method, and sorted key/value maps with
/// normalized numeric formatting.
inline std::string case_signature(const TestCase& c) {
    auto render_tokens = [](std::vector<std::pair<std::string, std::string>> kv) {
        std::sort(kv.begin(), kv.end());
        std::string out;
        for (const auto& [k, v] : kv) {
            double d;
            out += k + "=" + (text::parse_double(v, d) ? text::format_double(d) : v) + ",";
        }
        return out;
    };
    auto render_raws = [](std::vector<std::pair<std::string, double>> kv) {
        std::sort(kv.begin(), kv.end());
        std::string out;
        for (const auto& [k, v] : kv) out += k + "=" + text::format_double(v) + ",";
        return out;
    };
    return to_string(c.method) + " " + c.endpoint + " payload:" + render_tokens(c.api_payload) +
           " preset:" + render_raws(c.vv_preset) + " vv:" + render_raws(c.expected_vv) +
           " api:" + render_tokens(c.expected_api);
}

using CaseKeyFn = std::function<std::string(const TestCase&)>;

/// Set-based precision/recall of generated cases against ground truth under a
/// canonicalizing key function.
inline Metrics precision_recall(const std::vector<TestCase>& generated,
                                const std::vector<TestCase>& ground_truth,
                                const CaseKeyFn& key_fn = case_signature) {
    if (ground_truth.empty()) throw EmptyGroundTruth("no ground truth cases");
    std::set<std::string> gen, gt;
    for (const auto& c : generated) gen.insert(key_fn(c));
    for (const auto& c : ground_truth) gt.insert(key_fn(c));
    size_t hit = 0;
    for (const auto& s : gen) hit += gt.count(s);
    Metrics m;
    m.has_ground_truth = true;
    m.precision = gen.empty() ? 0.0 : static_cast<double>(hit) / gen.size();
    m.recall = static_cast<double>(hit) / gt.size();
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

inline MatchSummary summarize_match(const MatchResult& r) {
    MatchSummary s;
    s.id = r.id;
    s.endpoint = r.endpoint;
    s.method = r.method;
    s.property_key = r.property.key;
    s.can_key = r.can_key;
    s.vv_key = r.vv_key;
    s.stage1_category = r.key_api_to_can.category;
    s.stage1_score = r.key_api_to_can.score;
    s.stage2_category = r.key_can_to_vv.category;
    s.stage2_score = r.key_can_to_vv.score;
    s.value_pairs = static_cast<int>(r.values_api_to_can.pairs.size());
    if (r.conversion) s.conversion = r.conversion->describe();
    if (r.role) s.role = to_string(*r.role);
    return s;
}

// --- JSON bindings and the two report formats ---

inline void to_json(json& j, const FailedAssertion& a) {
    j = json{{"key", a.key}, {"expected", a.expected}, {"actual", a.actual}};
}
inline void from_json(const json& j, FailedAssertion& a) {
    a.key = j.at("key").get<std::string>();
    a.expected = j.at("expected").get<std::string>();
    a.actual = j.at("actual").get<std::string>();
}

inline void to_json(json& j, const TestOutcome& o) {
    j = json{{"case_id", o.case_id},
             {"verdict", to_string(o.verdict)},
             {"failed_assertions", o.failed_assertions},
             {"log", o.log}};
}
inline void from_json(const json& j, TestOutcome& o) {
    o.case_id = j.at("case_id").get<std::string>();
    o.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    o.failed_assertions = j.at("failed_assertions").get<std::vector<FailedAssertion>>();
    o.log = j.at("log").get<std::string>();
}

inline void to_json(json& j, const ApiVerdict& v) {
    j = json{{"endpoint", v.endpoint},
             {"method", to_string(v.method)},
             {"outcome", v.passed ? "pass" : "fail"},
             {"cases", v.case_outcomes}};
}
inline void from_json(const json& j, ApiVerdict& v) {
    v.endpoint = j.at("endpoint").get<std::string>();
    v.method = method_from_string(j.at("method").get<std::string>());
    v.passed = j.at("outcome").get<std::string>() == "pass";
    v.case_outcomes = j.at("cases").get<std::vector<TestOutcome>>();
}

inline void to_json(json& j, const Metrics& m) {
    j = json{{"pass_rate", m.pass_rate},
             {"precision", m.precision},
             {"recall", m.recall},
             {"f1", m.f1},
             {"has_ground_truth", m.has_ground_truth}};
}
inline void from_json(const json& j, Metrics& m) {
    m.pass_rate = j.at("pass_rate").get<double>();
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    m.has_ground_truth = j.at("has_ground_truth").get<bool>();
}

inline void to_json(json& j, const StageTimings& t) {
    j = json{{"ingest_ms", t.ingest_ms},
             {"match_ms", t.match_ms},
             {"gen_ms", t.gen_ms},
             {"run_ms", t.run_ms},
             {"total_ms", t.total_ms}};
}
inline void from_json(const json& j, StageTimings& t) {
    t.ingest_ms = j.at("ingest_ms").get<int64_t>();
    t.match_ms = j.at("match_ms").get<int64_t>();
    t.gen_ms = j.at("gen_ms").get<int64_t>();
    t.run_ms = j.at("run_ms").get<int64_t>();
    t.total_ms = j.at("total_ms").get<int64_t>();
}

inline void to_json(json& j, const MatchSummary& s) {
    j = json{{"id", s.id},
             {"endpoint", s.endpoint},
             {"method", to_string(s.method)},
             {"property", s.property_key},
             {"can_key", s.can_key},
             {"vv_key", s.vv_key},
             {"stage1_category", to_string(s.stage1_category)},
             {"stage1_score", s.stage1_score},
             {"stage2_category", to_string(s.stage2_category)},
             {"stage2_score", s.stage2_score},
             {"value_pairs", s.value_pairs},
             {"conversion", s.conversion},
             {"role", s.role}};
}
inline void from_json(const json& j, MatchSummary& s) {
    s.id = j.at("id").get<std::string>();
    s.endpoint = j.at("endpoint").get<std::string>();
    s.method = method_from_string(j.at("method").get<std::string>());
    s.property_key = j.at("property").get<std::string>();
    s.can_key = j.at("can_key").get<std::string>();
    s.vv_key = j.at("vv_key").get<std::string>();
    s.stage1_category = category_from_string(j.at("stage1_category").get<std::string>());
    s.stage1_score = j.at("stage1_score").get<double>();
    s.stage2_category = category_from_string(j.at("stage2_category").get<std::string>());
    s.stage2_score = j.at("stage2_score").get<double>();
    s.value_pairs = j.at("value_pairs").get<int>();
    s.conversion = j.at("conversion").get<std::string>();
    s.role = j.at("role").get<std::string>();
}

inline void to_json(json& j, const CanFrame& f) {
    j = json{{"key", f.key}, {"raw", f.raw}, {"timestamp", f.timestamp}};
}
inline void from_json(const json& j, CanFrame& f) {
    f.key = j.at("key").get<std::string>();
    f.raw = j.at("raw").get<double>();
    f.timestamp = j.at("timestamp").get<int64_t>();
}

inline void to_json(json& j, const RunReport& r) {
    j = json{{"rig_address", r.rig_address},
             {"backend", r.backend},
             {"strictness", r.strictness},
             {"verdicts", r.verdicts},
             {"errored_apis", r.errored_apis},
             {"skipped", r.skipped},
             {"matches", r.matches},
             {"metrics", r.metrics},
             {"can_log", r.can_log},
             {"timings", r.timings}};
}
inline void from_json(const json& j, RunReport& r) {
    r.rig_address = j.at("rig_address").get<std::string>();
    r.backend = j.at("backend").get<std::string>();
    r.strictness = j.at("strictness").get<std::string>();
    r.verdicts = j.at("verdicts").get<std::vector<ApiVerdict>>();
    r.errored_apis = j.at("errored_apis").get<std::vector<std::string>>();
    r.skipped = j.at("skipped").get<std::vector<Skipped>>();
    r.matches = j.at("matches").get<std::vector<MatchSummary>>();
    r.metrics = j.at("metrics").get<Metrics>();
    r.can_log = j.at("can_log").get<std::vector<CanFrame>>();
    r.timings = j.at("timings").get<StageTimings>();
}

enum class ReportFormat { record_text, human_text };

inline std::string emit_report(const RunReport& report, ReportFormat format) {
    if (format == ReportFormat::record_text) {
        json j = report;
        return j.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "Test run report\n";
    out << "===============\n";
    out << "rig: " << report.rig_address << "  backend: " << report.backend
        << "  strictness: " << report.strictness << "\n\n";
    size_t passed = 0;
    for (const auto& v : report.verdicts) passed += v.passed ? 1 : 0;
    out << "APIs: " << report.verdicts.size() << " tested, " << passed << " passed, "
        << (report.verdicts.size() - passed) << " failed, " << report.errored_apis.size()
        << " errored\n";
    out << "pass_rate: " << text::format_double(report.metrics.pass_rate) << "\n";
    if (report.metrics.has_ground_truth) {
        out << "precision: " << text::format_double(report.metrics.precision)
            << "  recall: " << text::format_double(report.metrics.recall)
            << "  f1: " << text::format_double(report.metrics.f1) << "\n";
    }
    out << "\nPer-API verdicts\n";
    for (const auto& v : report.verdicts) {
        out << "  [" << (v.passed ? "PASS" : "FAIL") << "] " << to_string(v.method) << " "
            << v.endpoint << " (" << v.case_outcomes.size() << " cases)\n";
        for (const auto& c : v.case_outcomes) {
            if (c.verdict == Verdict::pass) continue;
            out << "    " << to_string(c.verdict) << " " << c.case_id << "\n";
            for (const auto& a : c.failed_assertions)
                out << "      " << a.key << ": expected " << a.expected << ", actual "
                    << a.actual << "\n";
        }
    }
    for (const auto& api : report.errored_apis) out << "  [ERROR] " << api << "\n";
    out << "\nSkipped attributes (" << report.skipped.size() << ")\n";
    for (const auto& s : report.skipped)
        out << "  " << to_string(s.method) << " " << s.endpoint << " " << s.key << " @"
            << s.stage << ": " << s.reason << "\n";
    out << "\nMatches (" << report.matches.size() << ")\n";
    for (const auto& m : report.matches) {
        out << "  " << m.id << " -> " << m.can_key << " (" << to_string(m.stage1_category)
            << " " << text::format_double(m.stage1_score) << ") -> " << m.vv_key;
        if (!m.conversion.empty()) out << " [" << m.conversion << "]";
        if (!m.role.empty()) out << " [" << m.role << "]";
        out << "\n";
    }
    out << "\nCAN trace excerpt (" << report.can_log.size() << " frames)\n";
    for (const auto& f : report.can_log)
        out << "  #" << f.timestamp << " " << f.key << " = " << text::format_double(f.raw)
            << "\n";
    out << "\nTimings (ms): ingest " << report.timings.ingest_ms << ", match "
        << report.timings.match_ms << ", gen " << report.timings.gen_ms << ", run "
        << report.timings.run_ms << ", total " << report.timings.total_ms << "\n";
    return out.str();
}

inline RunReport parse_report(std::string_view record_text) {
    try {
        return json::parse(record_text).get<RunReport>();
    } catch (const nlohmann::json::exception& e) {
        throw SyntaxError(std::string("report record: ") + e.what());
    }
}

}  // namespace vapitest
