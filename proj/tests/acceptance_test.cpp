// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one test per release criterion, each printing a PASS/FAIL
// line. Tolerances are pinned in code.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "support.hpp"
#include "vapitest/corpus.hpp"
#include "vapitest/pipeline.hpp"

namespace vapitest {
namespace {

namespace fs = std::filesystem;

class Acceptance : public ::testing::Test {
protected:
    void Criterion(int number, const std::string& label) {
        number_ = number;
        label_ = label;
    }

    void TearDown() override {
        std::printf("[criterion %d] %s: %s\n", number_, label_.c_str(),
                    ::testing::Test::HasFailure() ? "FAIL" : "PASS");
        std::fflush(stdout);
    }

    struct TempDir {
        explicit TempDir(const std::string& name) : path("/tmp/vapitest_acc_" + name) {
            fs::remove_all(path);
            fs::create_directories(path);
        }
        ~TempDir() { fs::remove_all(path); }
        std::string path;
    };

    static PipelineConfig corpus_config(const std::string& corpus_dir,
                                        const std::string& out_dir) {
        PipelineConfig config;
        config.spec_path = corpus_dir + "/api_spec.json";
        config.can_path = corpus_dir + "/can_table.txt";
        config.vv_path = corpus_dir + "/vv_table.txt";
        config.rig = "auto";
        config.rig_config_path = corpus_dir + "/rig_config.json";
        config.manifest_path = corpus_dir + "/manifest.rec";
        config.out_dir = out_dir;
        config.backend_parallelism = 1;
        return config;
    }

    static double seconds_since(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    int number_ = 0;
    std::string label_;
};

TEST_F(Acceptance, C1_PipelineSanityLaw) {
    Criterion(1, "pipeline sanity law on a clean 20-API corpus");
    auto t0 = std::chrono::steady_clock::now();

    TempDir corpus_dir("c1_corpus"), out("c1_out");
    write_corpus(forge(20260809, CorpusProfile::clean, 20), corpus_dir.path);
    FakeClock clock;
    E2eResult result = run_e2e(corpus_config(corpus_dir.path, out.path), clock);

    EXPECT_EQ(result.report.metrics.pass_rate, 1.0);
    EXPECT_TRUE(result.report.metrics.has_ground_truth);
    EXPECT_EQ(result.report.metrics.precision, 1.0);
    EXPECT_EQ(result.report.metrics.recall, 1.0);
    EXPECT_EQ(result.exit_code, 0);
    EXPECT_LT(seconds_since(t0), 30.0);
}

TEST_F(Acceptance, C2_FailureDetection) {
    Criterion(2, "failure detection: 7 seeded faults, zero false positives");
    auto t0 = std::chrono::steady_clock::now();

    TempDir corpus_dir("c2_corpus"), out("c2_out");
    Corpus corpus = forge(20260810, CorpusProfile::mixed, 20, 7);
    write_corpus(corpus, corpus_dir.path);
    ASSERT_EQ(corpus.manifest.faulted_endpoints.size(), 7u);
    std::set<FaultKind> kinds;
    for (const auto& f : corpus.manifest.faults) kinds.insert(f.kind);
    ASSERT_EQ(kinds.size(), 5u);  // at least one of every fault kind

    FakeClock clock;
    E2eResult result = run_e2e(corpus_config(corpus_dir.path, out.path), clock);

    std::set<std::string> flagged;
    for (const auto& v : result.report.verdicts)
        if (!v.passed) flagged.insert(v.endpoint);
    std::set<std::string> expected(corpus.manifest.faulted_endpoints.begin(),
                                   corpus.manifest.faulted_endpoints.end());
    EXPECT_EQ(flagged, expected);  // all 7 flagged, 0 false positives among the 13
    EXPECT_TRUE(result.report.errored_apis.empty());
    EXPECT_NE(result.exit_code, 0);
    EXPECT_LT(seconds_since(t0), 60.0);
}

TEST_F(Acceptance, C3_FuzzyMatchingRecovery) {
    Criterion(3, "fuzzy matching recovery on 100 pairs per category");
    auto t0 = std::chrono::steady_clock::now();

    Corpus corpus = forge(20260811, CorpusProfile::fuzzy5, 100);
    for (const auto* cat : {"spelling", "abbreviation", "format", "logical", "semantic"})
        ASSERT_EQ(corpus.manifest.category_counts.at(cat), 100) << cat;

    auto matched = testing::match_corpus(corpus, Strictness::moderate);
    auto scores = score_against_manifest(matched.results, corpus.manifest);

    EXPECT_GE(scores.overall.precision(), 0.95);
    for (const auto* cat : {"spelling", "abbreviation", "format", "logical"})
        EXPECT_GE(scores.per_category.at(cat).recall(), 0.90) << cat;

    const auto& semantic = scores.per_category.at("semantic");
    std::printf("    overall precision %.4f; semantic recall %.4f "
                "(lexicon coverage %.4f)\n",
                scores.overall.precision(), semantic.recall(),
                scores.semantic_lexicon_coverage);
    EXPECT_LT(seconds_since(t0), 10.0);
}

TEST_F(Acceptance, C4_StrictnessMonotonicity) {
    Criterion(4, "strictness monotonicity on the pseudocode corpus");

    Corpus corpus = forge(20260812, CorpusProfile::pseudocode, 40);
    ASSERT_FALSE(corpus.manifest.pseudo_chains.empty());

    struct Level {
        Strictness strictness;
        std::set<std::string> selected;  // "endpoint|property|alt"
        CategoryScore score;
    };
    std::vector<Level> levels = {{Strictness::strict, {}, {}},
                                 {Strictness::moderate, {}, {}},
                                 {Strictness::relaxed, {}, {}}};
    for (auto& level : levels) {
        auto matched = testing::match_corpus(corpus, level.strictness);
        auto scores = score_against_manifest(matched.results, corpus.manifest);
        level.score = scores.pseudocode;
        for (const auto& r : matched.results) {
            for (const auto& chain : corpus.manifest.pseudo_chains) {
                if (chain.endpoint != r.endpoint || chain.key != r.property.key) continue;
                for (const auto& [l, right] : r.values_api_to_can.pairs) {
                    if (l != chain.api_label) continue;
                    for (const auto& alt : chain.alt_labels)
                        if (alt == right)
                            level.selected.insert(r.endpoint + "|" + r.property.key + "|" +
                                                  right);
                }
            }
        }
    }
    // exact set inclusion strict ⊆ moderate ⊆ relaxed
    for (const auto& s : levels[0].selected) EXPECT_TRUE(levels[1].selected.count(s)) << s;
    for (const auto& s : levels[1].selected) EXPECT_TRUE(levels[2].selected.count(s)) << s;
    // measured precision non-increasing, recall non-decreasing
    EXPECT_GE(levels[0].score.precision(), levels[1].score.precision() - 1e-12);
    EXPECT_GE(levels[1].score.precision(), levels[2].score.precision() - 1e-12);
    EXPECT_LE(levels[0].score.recall(), levels[1].score.recall() + 1e-12);
    EXPECT_LE(levels[1].score.recall(), levels[2].score.recall() + 1e-12);
    std::printf("    P: %.3f -> %.3f -> %.3f   R: %.3f -> %.3f -> %.3f\n",
                levels[0].score.precision(), levels[1].score.precision(),
                levels[2].score.precision(), levels[0].score.recall(),
                levels[1].score.recall(), levels[2].score.recall());
    // the corpus separates the levels: relaxed recovers strictly more
    EXPECT_GT(levels[2].score.recall(), levels[0].score.recall());
}

TEST_F(Acceptance, C5_ExecutorOracleEquivalence) {
    Criterion(5, "executor verdicts equal the direct VV-inspection oracle");

    size_t total_cases = 0;
    int corpus_index = 0;
    for (auto [profile, size, faults] :
         {std::tuple{CorpusProfile::clean, 20, 0}, std::tuple{CorpusProfile::mixed, 16, 0},
          std::tuple{CorpusProfile::mixed, 18, 6}, std::tuple{CorpusProfile::units, 16, 4}}) {
        Corpus corpus = forge(20260813 + corpus_index++, profile, size, faults);
        auto matched = testing::match_corpus(corpus, Strictness::moderate);
        auto [cases, skipped] = generate_test_cases(matched.results);
        TestPlan plan = parse_test_plan(render_test_plan(cases));

        RigServer server(corpus.rig_config);
        HttpRigPort port(server.url());
        auto outcomes = run_plan(plan, port);

        Rig oracle_rig(corpus.rig_config);  // fresh rig, same config, same step order
        ASSERT_EQ(outcomes.size(), plan.cases.size());
        for (size_t i = 0; i < plan.cases.size(); ++i) {
            Verdict oracle = testing::verdict_oracle(plan.cases[i], oracle_rig);
            EXPECT_EQ(outcomes[i].verdict, oracle)
                << plan.cases[i].id << " " << outcomes[i].log;
        }
        total_cases += plan.cases.size();
    }
    EXPECT_GE(total_cases, 500u);
    std::printf("    %zu cases cross-checked\n", total_cases);
}

TEST_F(Acceptance, C6_UnitEngine) {
    Criterion(6, "unit conversions: exact identities and 1e-12 round trips");

    EXPECT_EQ(convert({1.0, parse_unit("kW")}, parse_unit("W")).magnitude, 1000.0);
    EXPECT_EQ(convert({3.6, parse_unit("km/h")}, parse_unit("m/s")).magnitude, 1.0);

    struct Pair {
        const char *a, *b;
    };
    const Pair pairs[] = {{"km/h", "m/s"}, {"mph", "m/s"}, {"kW", "W"}, {"min", "s"},
                          {"h", "min"}};
    std::mt19937_64 rng(20260814);
    for (const auto& pair : pairs) {
        Unit ua = parse_unit(pair.a), ub = parse_unit(pair.b);
        for (int i = 0; i < 1000; ++i) {
            double x = (static_cast<double>(rng() % 2000001) - 1000000.0) / 313.0;
            double back = convert(convert({x, ua}, ub), ua).magnitude;
            double denom = std::max(std::fabs(x), 1e-300);
            ASSERT_LE(std::fabs(back - x) / denom, 1e-12) << pair.a << " " << x;
        }
    }
}

TEST_F(Acceptance, C7_TypedRetryContract) {
    Criterion(7, "typed-output retry contract and replay hermeticity");

    // scripted-failure harness
    BackendRequest req;
    req.task = BackendTask::key_match;
    req.inputs = json{{"left", {"a"}}, {"right", {"a"}}};
    req.output_schema = {{"pairs", FieldType::list}};
    std::string good = json{{"outputs",
                             {{"pairs", json::array({json{{"left", "a"},
                                                          {"right", "a"},
                                                          {"category", "exact"},
                                                          {"score", 1.0}}})}}}}
                           .dump();
    {
        req.max_retries = 3;
        ScriptedTransport transport({"bad", "also bad", good});
        auto resp = complete_typed(req, transport);
        EXPECT_EQ(resp.attempts_used, 3);
        EXPECT_LE(resp.attempts_used, req.max_retries + 1);
    }
    {
        req.max_retries = 2;
        ScriptedTransport transport({"bad", "bad", "bad", good});
        EXPECT_THROW(complete_typed(req, transport), SchemaViolation);
        EXPECT_EQ(transport.requests.size(), 3u);  // exactly max_retries + 1 attempts
    }

    // whole-pipeline bit-determinism under the replay backend
    TempDir corpus_dir("c7_corpus"), rec("c7_rec"), r1("c7_r1"), r2("c7_r2");
    write_corpus(forge(20260815, CorpusProfile::mixed, 5), corpus_dir.path);
    std::string store = rec.path + "/store.json";
    testing::WireServer server;
    {
        PipelineConfig config = corpus_config(corpus_dir.path, rec.path);
        config.backend_kind = "record";
        config.backend_url = server.url();
        config.replay_store = store;
        FakeClock clock;
        run_e2e(config, clock);
    }
    auto replay_once = [&](const std::string& out_dir) {
        PipelineConfig config = corpus_config(corpus_dir.path, out_dir);
        config.backend_kind = "replay";
        config.replay_store = store;
        config.rig_port = 18733;  // pinned so the report is byte-identical
        FakeClock clock;
        run_e2e(config, clock);
    };
    replay_once(r1.path);
    replay_once(r2.path);
    for (const auto* name : {"objects.rec", "matches.rec", "skipped.rec", "cases.rec",
                             "report.rec", "report.txt"})
        EXPECT_EQ(io::read_file(r1.path + "/" + name), io::read_file(r2.path + "/" + name))
            << name;
}

TEST_F(Acceptance, C8_ReportAccounting) {
    Criterion(8, "tested + skipped partitions extracted properties, reasons present");

    int seed = 20260816;
    for (auto profile : {CorpusProfile::clean, CorpusProfile::fuzzy5,
                         CorpusProfile::pseudocode, CorpusProfile::units,
                         CorpusProfile::dependencies, CorpusProfile::mixed}) {
        Corpus corpus = forge(seed++, profile, 8);
        auto sets = extract_test_objects(corpus.spec);
        auto matched = testing::match_corpus(corpus, Strictness::moderate);
        auto [cases, gen_skipped] = generate_test_cases(matched.results);
        std::vector<Skipped> skipped = matched.skipped;
        skipped.insert(skipped.end(), gen_skipped.begin(), gen_skipped.end());

        EXPECT_NO_THROW(check_accounting(sets, cases, skipped)) << to_string(profile);
        for (const auto& s : skipped) {
            EXPECT_FALSE(s.reason.empty()) << to_string(profile);
            EXPECT_FALSE(s.stage.empty()) << to_string(profile);
        }
    }
}

TEST_F(Acceptance, C9_SmallInstanceAssignmentOptimality) {
    Criterion(9, "greedy key assignment equals exhaustive optimum on 200 instances");

    static const std::vector<std::string> words = {
        "driver", "time",  "setting", "speed",  "cabin", "mode", "target",
        "level",  "alarm", "charge",  "zone",   "rest",  "week", "limit",
        "power",  "route", "window",  "heater"};
    std::mt19937_64 rng(20260817);
    const Lexicons& lexicons = Lexicons::builtin();

    for (int trial = 0; trial < 200; ++trial) {
        // corpus-like instance: up to 8 keys per side
        std::vector<std::string> left, right;
        std::set<std::string> used_left, used_right;
        auto add_right = [&](const std::string& key) {
            if (used_right.insert(text::fold_key(key)).second) right.push_back(key);
        };
        size_t n = 1 + rng() % 8;
        for (size_t i = 0; i < n; ++i) {
            std::string key = words[rng() % words.size()];
            std::string second = words[rng() % words.size()];
            key += static_cast<char>(std::toupper(second[0]));
            key += second.substr(1) + std::to_string(rng() % 40);
            if (!used_left.insert(text::fold_key(key)).second) {
                --i;
                continue;
            }
            left.push_back(key);
            switch (rng() % 5) {
                case 0: add_right(key); break;
                case 1: add_right(text::upper(key)); break;
                case 2: {
                    std::string s = key;
                    s.erase(1 + rng() % (s.size() - 1), 1);
                    add_right(s);
                    break;
                }
                case 3: add_right(text::fold_key(key).substr(0, 4)); break;
                default: break;  // left key without a partner
            }
        }
        while (right.size() < n && rng() % 2)
            add_right("reserved" + std::to_string(rng() % 50));
        if (right.empty()) right.push_back("reservedX");

        RulesBackend backend;
        MatchEngine engine(backend, Strictness::moderate);
        auto got = engine.match_keys(left, right);

        std::vector<std::vector<double>> scores(left.size(),
                                                std::vector<double>(right.size(), 0.0));
        for (size_t i = 0; i < left.size(); ++i)
            for (size_t j = 0; j < right.size(); ++j)
                scores[i][j] = score_keys(left[i], right[j], lexicons).score;
        testing::AssignmentOracle oracle(scores, threshold(Strictness::moderate));
        auto best = oracle.solve();

        double got_total = 0;
        std::set<std::pair<std::string, std::string>> got_pairs, want_pairs;
        for (const auto& p : got) {
            got_total += p.score;
            got_pairs.insert({p.left_key, p.right_key});
        }
        for (const auto& p : best) want_pairs.insert({left[p.left], right[p.right]});
        ASSERT_NEAR(got_total, oracle.best_total(), 1e-9) << "trial " << trial;
        if (oracle.maximizer_count() == 1)
            ASSERT_EQ(got_pairs, want_pairs) << "trial " << trial;
    }
}

}  // namespace
}  // namespace vapitest
