// SPDX-License-Identifier: Apache-2.0
#include "vapitest/executor.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "vapitest/corpus.hpp"

namespace vapitest {
namespace {

RigConfig small_config() {
    RigConfig config;
    RigEndpointConfig climate;
    climate.path = "/climate";
    climate.methods = {Method::PUT, Method::GET};
    RigPropertyConfig ac;
    ac.key = "acMode";
    ac.kind = RigPropKind::enumeration;
    ac.can_key = "acMode_CAN";
    ac.labels = {{"STANDARD", "acMode_CAN", 0, 0.0}, {"ECONOMY", "acMode_CAN", 1, 2.0}};
    climate.properties = {ac};
    config.endpoints = {climate};
    config.vv_bindings = {{"acMode_CAN", "acMode"}};
    config.vv_defaults = {{"acMode", -1}};
    return config;
}

std::string small_plan() {
    return
        "# plan\n"
        "c1 PUT /climate acMode=ECONOMY\n"
        "c1 VV_EXPECT acMode 2\n"
        "c2 VV_SET acMode 0\n"
        "c2 GET /climate\n"
        "c2 API_EXPECT acMode STANDARD\n";
}

TEST(RunPlan, CorrectRigAllPass) {
    Rig rig(small_config());
    InProcessPort port(rig);
    auto outcomes = run_plan(parse_test_plan(small_plan()), port);
    ASSERT_EQ(outcomes.size(), 2u);
    for (const auto& o : outcomes) EXPECT_EQ(o.verdict, Verdict::pass) << o.log;
}

TEST(RunPlan, SwappedEnumFaultFailsWithAssertionDetail) {
    Rig rig(small_config());
    FaultSpec fault;
    fault.kind = FaultKind::swapped_enum;
    fault.target = "acMode_CAN";
    fault.label_a = "STANDARD";
    fault.label_b = "ECONOMY";
    rig.inject_fault(fault);
    InProcessPort port(rig);
    auto outcomes = run_plan(parse_test_plan(small_plan()), port);
    EXPECT_EQ(outcomes[0].verdict, Verdict::fail);
    ASSERT_EQ(outcomes[0].failed_assertions.size(), 1u);
    EXPECT_EQ(outcomes[0].failed_assertions[0].key, "acMode");
    EXPECT_EQ(outcomes[0].failed_assertions[0].expected, "2");
    EXPECT_EQ(outcomes[0].failed_assertions[0].actual, "0");
}

TEST(RunPlan, UnreachableRigErrorsEveryCase) {
    HttpRigPort port("http://127.0.0.1:9");  // discard port, nothing listens
    auto outcomes = run_plan(parse_test_plan(small_plan()), port);
    ASSERT_EQ(outcomes.size(), 2u);
    for (const auto& o : outcomes) EXPECT_EQ(o.verdict, Verdict::error);
}

TEST(RunPlan, HttpAndInProcessAgree) {
    RigServer server(small_config());
    HttpRigPort http_port(server.url());
    auto over_http = run_plan(parse_test_plan(small_plan()), http_port);

    Rig rig(small_config());
    InProcessPort in_port(rig);
    auto in_process = run_plan(parse_test_plan(small_plan()), in_port);

    ASSERT_EQ(over_http.size(), in_process.size());
    for (size_t i = 0; i < over_http.size(); ++i)
        EXPECT_EQ(over_http[i].verdict, in_process[i].verdict);
}

TEST(GroupVerdicts, PassIffAllCasesPass) {
    TestPlan plan = parse_test_plan(small_plan());
    std::vector<TestOutcome> outcomes = {{"c1", Verdict::pass, {}, ""},
                                         {"c2", Verdict::fail, {{"k", "1", "2"}}, ""}};
    auto [verdicts, errored] = group_verdicts(plan, outcomes);
    ASSERT_EQ(verdicts.size(), 2u);  // PUT /climate and GET /climate
    EXPECT_TRUE(verdicts[0].passed);
    EXPECT_FALSE(verdicts[1].passed);
    EXPECT_TRUE(errored.empty());
}

TEST(GroupVerdicts, ErrorOnlyApisAreSeparated) {
    TestPlan plan = parse_test_plan(small_plan());
    std::vector<TestOutcome> outcomes = {{"c1", Verdict::error, {}, "boom"},
                                         {"c2", Verdict::pass, {}, ""}};
    auto [verdicts, errored] = group_verdicts(plan, outcomes);
    ASSERT_EQ(verdicts.size(), 1u);
    EXPECT_TRUE(verdicts[0].passed);
    ASSERT_EQ(errored.size(), 1u);
    EXPECT_EQ(errored[0], "PUT /climate");
    // infrastructure errors never drag pass_rate down
    EXPECT_EQ(pass_rate(verdicts), 1.0);
}

TEST(PassRate, FortyOneApis) {
    std::vector<ApiVerdict> verdicts(41);
    for (size_t i = 0; i < verdicts.size(); ++i) {
        verdicts[i].endpoint = "/e" + std::to_string(i);
        verdicts[i].method = Method::PUT;
        verdicts[i].passed = i != 0;  // 40 of 41 pass
    }
    EXPECT_NEAR(pass_rate(verdicts), 0.9756, 5e-4);
    EXPECT_EQ(std::round(pass_rate(verdicts) * 100) / 100, 0.98);
}

TEST(PassRate, AllPassAndEmpty) {
    std::vector<ApiVerdict> verdicts(3);
    for (auto& v : verdicts) v.passed = true;
    EXPECT_EQ(pass_rate(verdicts), 1.0);
    EXPECT_THROW(pass_rate({}), EmptyInput);
}

TEST(PassRate, SeededCorpusFraction) {
    std::vector<ApiVerdict> verdicts(20);
    for (size_t i = 0; i < 20; ++i) verdicts[i].passed = i >= 7;  // 7 faulted
    EXPECT_EQ(pass_rate(verdicts), 13.0 / 20.0);
    EXPECT_EQ(pass_rate(verdicts), 0.65);
}

TestCase mk_case(const std::string& id, Method m, const std::string& ep,
                 const std::string& key, const std::string& value, double raw) {
    TestCase c;
    c.id = id;
    c.method = m;
    c.endpoint = ep;
    if (m == Method::PUT) {
        c.api_payload = {{key, value}};
        c.expected_vv = {{key + "_vv", raw}};
    } else {
        c.vv_preset = {{key + "_vv", raw}};
        c.expected_api = {{key, value}};
    }
    return c;
}

TEST(PrecisionRecall, IdenticalSetsScorePerfect) {
    std::vector<TestCase> gt = {mk_case("a", Method::PUT, "/x", "k", "A", 1),
                                mk_case("b", Method::GET, "/x", "k", "A", 1)};
    Metrics m = precision_recall(gt, gt);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.recall, 1.0);
    EXPECT_EQ(m.f1, 1.0);
}

TEST(PrecisionRecall, OneSpuriousCase) {
    std::vector<TestCase> gt = {mk_case("a", Method::PUT, "/x", "k", "A", 1),
                                mk_case("b", Method::PUT, "/x", "k", "B", 2),
                                mk_case("c", Method::GET, "/x", "k", "A", 1),
                                mk_case("d", Method::GET, "/x", "k", "B", 2)};
    std::vector<TestCase> gen = gt;
    gen.push_back(mk_case("e", Method::PUT, "/x", "k", "C", 3));  // spurious
    Metrics m = precision_recall(gen, gt);
    EXPECT_EQ(m.precision, 0.8);
    EXPECT_EQ(m.recall, 1.0);
}

TEST(PrecisionRecall, IdsDoNotAffectSignatures) {
    std::vector<TestCase> gt = {mk_case("gt-1", Method::PUT, "/x", "k", "A", 1)};
    std::vector<TestCase> gen = {mk_case("other-id", Method::PUT, "/x", "k", "A", 1)};
    Metrics m = precision_recall(gen, gt);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.recall, 1.0);
}

TEST(PrecisionRecall, NumericFormattingNormalized) {
    auto a = mk_case("1", Method::PUT, "/x", "k", "250", 69.44444444444444);
    auto b = mk_case("2", Method::PUT, "/x", "k", "250.0", 69.44444444444444);
    EXPECT_EQ(case_signature(a), case_signature(b));
}

TEST(PrecisionRecall, AgreesWithBruteForceIntersection) {
    std::mt19937_64 rng(83);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<TestCase> gt, gen;
        size_t n_gt = 1 + rng() % 8, n_gen = rng() % 8;
        for (size_t i = 0; i < n_gt; ++i)
            gt.push_back(mk_case("g" + std::to_string(i), Method::PUT, "/x", "k",
                                 "V" + std::to_string(rng() % 6), double(rng() % 4)));
        for (size_t i = 0; i < n_gen; ++i)
            gen.push_back(mk_case("h" + std::to_string(i), Method::PUT, "/x", "k",
                                  "V" + std::to_string(rng() % 6), double(rng() % 4)));
        // brute force on signature sets
        std::set<std::string> gt_sigs, gen_sigs;
        for (const auto& c : gt) gt_sigs.insert(case_signature(c));
        for (const auto& c : gen) gen_sigs.insert(case_signature(c));
        size_t inter = 0;
        for (const auto& s : gen_sigs) inter += gt_sigs.count(s);

        Metrics m = precision_recall(gen, gt);
        double want_p = gen_sigs.empty() ? 0.0 : double(inter) / gen_sigs.size();
        double want_r = double(inter) / gt_sigs.size();
        EXPECT_DOUBLE_EQ(m.precision, want_p);
        EXPECT_DOUBLE_EQ(m.recall, want_r);
        double want_f1 =
            want_p + want_r == 0 ? 0.0 : 2 * want_p * want_r / (want_p + want_r);
        EXPECT_DOUBLE_EQ(m.f1, want_f1);
    }
}

TEST(PrecisionRecall, EmptyGroundTruthRejected) {
    EXPECT_THROW(precision_recall({}, {}), EmptyGroundTruth);
}

RunReport random_report(std::mt19937_64& rng) {
    RunReport r;
    r.rig_address = "http://127.0.0.1:" + std::to_string(1000 + rng() % 60000);
    r.backend = rng() % 2 ? "rules" : "replay";
    r.strictness = rng() % 2 ? "moderate" : "strict";
    size_t n = rng() % 4;
    for (size_t i = 0; i < n; ++i) {
        ApiVerdict v;
        v.endpoint = "/e" + std::to_string(i);
        v.method = rng() % 2 ? Method::PUT : Method::GET;
        v.passed = rng() % 2;
        size_t cases = 1 + rng() % 3;
        for (size_t c = 0; c < cases; ++c) {
            TestOutcome o;
            o.case_id = "c" + std::to_string(i) + std::to_string(c);
            o.verdict = v.passed ? Verdict::pass : Verdict::fail;
            if (!v.passed)
                o.failed_assertions.push_back(
                    {"k" + std::to_string(c), std::to_string(rng() % 10),
                     std::to_string(rng() % 10)});
            o.log = "PUT /e -> 200\n";
            v.case_outcomes.push_back(o);
        }
        r.verdicts.push_back(v);
    }
    if (rng() % 3 == 0) r.errored_apis.push_back("GET /gone");
    if (rng() % 2) r.skipped.push_back({"/e0", Method::PUT, "prop", "value_match",
                                        "unmatched_labels: X"});
    MatchSummary s;
    s.id = "m:/e0:PUT:prop";
    s.endpoint = "/e0";
    s.method = Method::PUT;
    s.property_key = "prop";
    s.can_key = "prop_CAN";
    s.vv_key = "prop_vv";
    s.stage1_category = MatchCategory::spelling;
    s.stage1_score = 0.92;
    s.stage2_category = MatchCategory::exact;
    s.stage2_score = 1.0;
    s.value_pairs = 2;
    r.matches.push_back(s);
    r.metrics.pass_rate = double(rng() % 101) / 100.0;
    r.metrics.precision = double(rng() % 101) / 100.0;
    r.metrics.recall = double(rng() % 101) / 100.0;
    r.metrics.f1 = double(rng() % 101) / 100.0;
    r.metrics.has_ground_truth = rng() % 2;
    r.can_log.push_back({"acMode_CAN", double(rng() % 5), int64_t(rng() % 100)});
    r.timings = {int64_t(rng() % 50), int64_t(rng() % 50), int64_t(rng() % 50),
                 int64_t(rng() % 50), int64_t(rng() % 200)};
    return r;
}

TEST(Report, RecordRoundTripOverRandomizedRuns) {
    std::mt19937_64 rng(101);
    for (int i = 0; i < 50; ++i) {
        RunReport r = random_report(rng);
        std::string rec = emit_report(r, ReportFormat::record_text);
        EXPECT_EQ(parse_report(rec), r) << "iteration " << i;
    }
}

TEST(Report, BothFormatsCarryTheRunContents) {
    std::mt19937_64 rng(7);
    RunReport r = random_report(rng);
    r.skipped = {{"/e0", Method::PUT, "prop", "value_match", "missing_unit"}};
    std::string rec = emit_report(r, ReportFormat::record_text);
    std::string txt = emit_report(r, ReportFormat::human_text);
    for (const auto* needle : {"prop", "missing_unit", "pass_rate"}) {
        EXPECT_NE(rec.find(needle), std::string::npos) << needle;
        EXPECT_NE(txt.find(needle), std::string::npos) << needle;
    }
    EXPECT_NE(txt.find("Timings"), std::string::npos);
}

TEST(Report, SkippedAttributeListedWithReason) {
    RunReport r;
    r.rig_address = "x";
    r.backend = "rules";
    r.strictness = "moderate";
    r.metrics.pass_rate = 1.0;
    r.skipped.push_back({"/battery", Method::PUT, "power", "unit_reconcile", "missing_unit"});
    std::string txt = emit_report(r, ReportFormat::human_text);
    EXPECT_NE(txt.find("power @unit_reconcile: missing_unit"), std::string::npos);
}

TEST(Report, EmptyRunIsValid) {
    RunReport empty;
    std::string rec = emit_report(empty, ReportFormat::record_text);
    EXPECT_EQ(parse_report(rec), empty);
    EXPECT_FALSE(emit_report(empty, ReportFormat::human_text).empty());
}

TEST(Report, ParseRejectsGarbage) {
    EXPECT_THROW(parse_report("{nope"), SyntaxError);
}

}  // namespace
}  // namespace vapitest
