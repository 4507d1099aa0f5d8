// SPDX-License-Identifier: Apache-2.0
#pragma once

// End-to-end workflow and its stage functions: extract -> map to CAN -> map
// to VV -> generate -> render -> run -> report. Every stage reads the prior
// stage's artifact file and writes its own, so chaining the stage subcommands
// reproduces run_e2e byte for byte.
//
// Artifacts in the output directory:
//   objects.rec  extracted test object sets
//   matches.rec  completed match chains (+ backend/strictness echo)
//   skipped.rec  skipped attributes with stage and reason
//   cases.rec    generated test cases
//   plan.txt     executable step plan
//   run.rec      case outcomes, trace excerpt, timings
//   report.rec   machine-readable report
//   report.txt   human-readable report

#include <chrono>
#include <future>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vapitest/backend.hpp"
#include "vapitest/corpus.hpp"
#include "vapitest/executor.hpp"
#include "vapitest/http_transport.hpp"
#include "vapitest/io.hpp"
#include "vapitest/matching.hpp"
#include "vapitest/rig_server.hpp"
#include "vapitest/signal_tables.hpp"
#include "vapitest/spec_ingest.hpp"
#include "vapitest/testcase_gen.hpp"

namespace vapitest {

class Clock {
public:
    virtual ~Clock() = default;
    virtual int64_t now_ms() = 0;
};

class SteadyClock : public Clock {
public:
    int64_t now_ms() override {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now().time_since_epoch())
            .count();
    }
};

/// Frozen clock; makes whole reports byte-deterministic in hermetic runs.
class FakeClock : public Clock {
public:
    explicit FakeClock(int64_t t = 0) : t_(t) {}
    int64_t now_ms() override { return t_; }

private:
    int64_t t_;
};

struct PipelineConfig {
    std::string spec_path;
    std::string can_path;
    std::string vv_path;
    Strictness strictness = Strictness::moderate;
    std::string backend_kind = "rules";  // rules | remote | replay | record
    std::string backend_url;             // remote/record
    std::string replay_store;            // replay/record
    std::string rig = "auto";            // "auto" or a base URL
    std::string rig_config_path;         // required for auto rig
    int rig_port = 0;                    // auto rig port; 0 picks a free one
    std::string out_dir = "out";
    std::string manifest_path;           // optional ground truth
    std::string units_path;              // optional registry override
    std::string synonyms_path;           // optional lexicon overrides
    std::string antonyms_path;
    std::string boolean_path;
    int backend_parallelism = 4;
    int max_retries = 3;
};

struct PipelineEnv {
    Lexicons lexicons;
    UnitRegistry registry;
    std::shared_ptr<Backend> backend;
};

inline PipelineEnv make_env(const PipelineConfig& config) {
    PipelineEnv env;
    env.lexicons = Lexicons::builtin();
    if (!config.synonyms_path.empty()) {
        env.lexicons.synonyms.clear();
        env.lexicons.load_synonyms(io::read_file(config.synonyms_path));
    }
    if (!config.antonyms_path.empty()) {
        env.lexicons.antonyms.clear();
        env.lexicons.load_antonyms(io::read_file(config.antonyms_path));
    }
    if (!config.boolean_path.empty()) {
        env.lexicons.bool_classes.clear();
        env.lexicons.load_boolean(io::read_file(config.boolean_path));
    }
    env.registry = config.units_path.empty()
                       ? UnitRegistry::builtin()
                       : UnitRegistry::from_tsv(io::read_file(config.units_path));

    const char* token_env = std::getenv("MATCH_BACKEND_TOKEN");
    std::string token = token_env ? token_env : "";
    if (config.backend_kind == "rules") {
        env.backend = std::make_shared<RulesBackend>(env.lexicons, env.registry);
    } else if (config.backend_kind == "remote") {
        env.backend = std::make_shared<ClientBackend>(
            std::make_shared<HttpTransport>(config.backend_url, token), "remote",
            config.backend_parallelism);
    } else if (config.backend_kind == "replay") {
        env.backend = std::make_shared<ClientBackend>(
            std::make_shared<ReplayTransport>(config.replay_store, ReplayMode::replay),
            "replay", config.backend_parallelism);
    } else if (config.backend_kind == "record") {
        env.backend = std::make_shared<ClientBackend>(
            std::make_shared<ReplayTransport>(
                config.replay_store, ReplayMode::record,
                std::make_shared<HttpTransport>(config.backend_url, token)),
            "record", config.backend_parallelism);
    } else {
        throw SchemaError("unknown backend '" + config.backend_kind + "'");
    }
    return env;
}

inline SpecFormat spec_format_for(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    return (ext == "json" || ext == "rec") ? SpecFormat::json_like : SpecFormat::yaml_like;
}

// --- stage functions -------------------------------------------------------

inline std::vector<TestObjectSet> stage_ingest(const PipelineConfig& config) {
    ApiSpec spec = parse_spec(io::read_file(config.spec_path),
                              spec_format_for(config.spec_path), config.spec_path);
    auto sets = extract_test_objects(spec);
    io::ensure_dir(config.out_dir);
    json j{{"sets", sets}};
    io::write_file(config.out_dir + "/objects.rec", j.dump(2) + "\n");
    return sets;
}

inline std::vector<TestObjectSet> load_objects(const std::string& out_dir) {
    json j = json::parse(io::read_file(out_dir + "/objects.rec"));
    return j.at("sets").get<std::vector<TestObjectSet>>();
}

struct MatchStageOutput {
    std::vector<MatchResult> results;
    std::vector<Skipped> skipped;
};

/// Both mapping stages for every object set. Sets are matched independently
/// (parallel when asked) and merged back in input order.
inline MatchStageOutput run_matching(const PipelineEnv& env, const PipelineConfig& config,
                                     const std::vector<TestObjectSet>& sets,
                                     const CanTable& can, const VvTable& vv) {
    struct PerSet {
        std::vector<MatchResult> results;
        std::vector<Skipped> skipped;
    };
    auto match_one = [&](const TestObjectSet& set) {
        MatchEngine engine(*env.backend, config.strictness, env.lexicons, env.registry);
        auto [partials, skipped1] = engine.map_api_to_can(set, can);
        auto [results, skipped2] = engine.map_can_to_vv(partials, vv);
        PerSet out;
        out.results = std::move(results);
        out.skipped = std::move(skipped1);
        out.skipped.insert(out.skipped.end(), skipped2.begin(), skipped2.end());
        return out;
    };

    std::vector<PerSet> per_set(sets.size());
    int parallelism = std::max(1, config.backend_parallelism);
    if (parallelism == 1 || sets.size() < 2) {
        for (size_t i = 0; i < sets.size(); ++i) per_set[i] = match_one(sets[i]);
    } else {
        std::vector<std::future<PerSet>> futures;
        for (size_t i = 0; i < sets.size(); ++i)
            futures.push_back(std::async(std::launch::async, match_one, std::cref(sets[i])));
        for (size_t i = 0; i < sets.size(); ++i) per_set[i] = futures[i].get();
    }

    MatchStageOutput out;
    for (auto& ps : per_set) {
        out.results.insert(out.results.end(), ps.results.begin(), ps.results.end());
        out.skipped.insert(out.skipped.end(), ps.skipped.begin(), ps.skipped.end());
    }
    return out;
}

inline MatchStageOutput stage_match(const PipelineEnv& env, const PipelineConfig& config,
                                    const std::vector<TestObjectSet>& sets) {
    CanTable can = parse_can_table(io::read_file(config.can_path));
    VvTable vv = parse_vv_table(io::read_file(config.vv_path));
    MatchStageOutput out = run_matching(env, config, sets, can, vv);
    json matches{{"backend", env.backend->name()},
                 {"strictness", to_string(config.strictness)},
                 {"results", out.results}};
    io::write_file(config.out_dir + "/matches.rec", matches.dump(2) + "\n");
    json skipped{{"skipped", out.skipped}};
    io::write_file(config.out_dir + "/skipped.rec", skipped.dump(2) + "\n");
    return out;
}

inline MatchStageOutput load_matches(const std::string& out_dir) {
    MatchStageOutput out;
    json m = json::parse(io::read_file(out_dir + "/matches.rec"));
    out.results = m.at("results").get<std::vector<MatchResult>>();
    json s = json::parse(io::read_file(out_dir + "/skipped.rec"));
    out.skipped = s.at("skipped").get<std::vector<Skipped>>();
    return out;
}

struct GenStageOutput {
    std::vector<TestCase> cases;
    std::vector<Skipped> skipped;  // matching skips + generation skips
};

inline GenStageOutput stage_gen(const PipelineConfig& config, const MatchStageOutput& matched) {
    auto [cases, gen_skipped] = generate_test_cases(matched.results);
    GenStageOutput out;
    out.cases = std::move(cases);
    out.skipped = matched.skipped;
    out.skipped.insert(out.skipped.end(), gen_skipped.begin(), gen_skipped.end());

    json cases_j{{"cases", out.cases}};
    io::write_file(config.out_dir + "/cases.rec", cases_j.dump(2) + "\n");
    json skipped_j{{"skipped", out.skipped}};
    io::write_file(config.out_dir + "/skipped.rec", skipped_j.dump(2) + "\n");
    io::write_file(config.out_dir + "/plan.txt", render_test_plan(out.cases, config.rig));
    return out;
}

inline std::vector<TestCase> load_cases(const std::string& out_dir) {
    json j = json::parse(io::read_file(out_dir + "/cases.rec"));
    return j.at("cases").get<std::vector<TestCase>>();
}

struct RunStageOutput {
    std::string rig_address;
    std::vector<TestOutcome> outcomes;
    std::vector<CanFrame> can_log;
    StageTimings timings;
};

inline constexpr size_t kTraceExcerptLimit = 64;

/// Executes plan.txt against `port`, then snapshots the trace excerpt.
inline RunStageOutput stage_run(const PipelineConfig& config, RigPort& port) {
    TestPlan plan = parse_test_plan(io::read_file(config.out_dir + "/plan.txt"));
    RunStageOutput out;
    out.rig_address = port.address();
    out.outcomes = run_plan(plan, port);
    out.can_log = port.trace();
    if (out.can_log.size() > kTraceExcerptLimit) out.can_log.resize(kTraceExcerptLimit);
    return out;
}

inline void write_run(const PipelineConfig& config, const RunStageOutput& run) {
    json j{{"rig_address", run.rig_address},
           {"outcomes", run.outcomes},
           {"can_log", run.can_log},
           {"timings", run.timings}};
    io::write_file(config.out_dir + "/run.rec", j.dump(2) + "\n");
}

inline RunStageOutput load_run(const std::string& out_dir) {
    json j = json::parse(io::read_file(out_dir + "/run.rec"));
    RunStageOutput out;
    out.rig_address = j.at("rig_address").get<std::string>();
    out.outcomes = j.at("outcomes").get<std::vector<TestOutcome>>();
    out.can_log = j.at("can_log").get<std::vector<CanFrame>>();
    out.timings = j.at("timings").get<StageTimings>();
    return out;
}

/// Accounting invariant: every extracted property lands in exactly one of
/// tested / skipped.
inline void check_accounting(const std::vector<TestObjectSet>& sets,
                             const std::vector<TestCase>& cases,
                             const std::vector<Skipped>& skipped) {
    auto prop_id = [](const std::string& ep, Method m, const std::string& key) {
        return to_string(m) + " " + ep + "#" + key;
    };
    std::set<std::string> tested;
    for (const auto& c : cases) {
        const auto& kv = c.method == Method::PUT ? c.api_payload : c.expected_api;
        for (const auto& [k, v] : kv) tested.insert(prop_id(c.endpoint, c.method, k));
    }
    std::set<std::string> skipped_set;
    for (const auto& s : skipped) skipped_set.insert(prop_id(s.endpoint, s.method, s.key));

    for (const auto& set : sets) {
        for (const auto& p : set.properties) {
            std::string id = prop_id(set.endpoint_path, set.method, p.key);
            bool t = tested.count(id) > 0, s = skipped_set.count(id) > 0;
            if (t == s)
                throw SchemaError("accounting violation for " + id +
                                  (t ? " (both tested and skipped)" : " (neither)"));
        }
    }
}

struct ReportInputs {
    std::string backend;
    std::string strictness;
    std::vector<MatchResult> results;
    std::vector<Skipped> skipped;
    std::vector<TestCase> cases;
    RunStageOutput run;
    std::optional<CorpusManifest> manifest;
};

inline RunReport build_report(const ReportInputs& in) {
    RunReport report;
    report.rig_address = in.run.rig_address;
    report.backend = in.backend;
    report.strictness = in.strictness;

    TestPlan plan = parse_test_plan(render_test_plan(in.cases));
    auto [verdicts, errored] = group_verdicts(plan, in.run.outcomes);
    report.verdicts = std::move(verdicts);
    report.errored_apis = std::move(errored);
    report.skipped = in.skipped;
    for (const auto& r : in.results) report.matches.push_back(summarize_match(r));
    report.can_log = in.run.can_log;
    report.timings = in.run.timings;

    report.metrics.pass_rate = report.verdicts.empty() ? 1.0 : pass_rate(report.verdicts);
    if (in.manifest && !in.manifest->ground_truth_cases.empty()) {
        Metrics pr = precision_recall(in.cases, in.manifest->ground_truth_cases);
        report.metrics.precision = pr.precision;
        report.metrics.recall = pr.recall;
        report.metrics.f1 = pr.f1;
        report.metrics.has_ground_truth = true;
    }
    return report;
}

inline void write_report(const PipelineConfig& config, const RunReport& report) {
    io::write_file(config.out_dir + "/report.rec",
                   emit_report(report, ReportFormat::record_text));
    io::write_file(config.out_dir + "/report.txt",
                   emit_report(report, ReportFormat::human_text));
}

struct E2eResult {
    RunReport report;
    int exit_code = 0;
};

/// The whole workflow. Per-stage wall times come from `clock` so hermetic
/// runs can freeze them.
inline E2eResult run_e2e(const PipelineConfig& config, Clock& clock) {
    PipelineEnv env = make_env(config);
    io::ensure_dir(config.out_dir);

    int64_t t0 = clock.now_ms();
    auto sets = stage_ingest(config);
    int64_t t1 = clock.now_ms();
    MatchStageOutput matched = stage_match(env, config, sets);
    int64_t t2 = clock.now_ms();
    GenStageOutput gen = stage_gen(config, matched);
    int64_t t3 = clock.now_ms();

    check_accounting(sets, gen.cases, gen.skipped);

    std::unique_ptr<RigServer> auto_rig;
    std::string rig_url = config.rig;
    if (config.rig == "auto") {
        if (config.rig_config_path.empty())
            throw ConfigError("--rig auto needs a rig config path");
        auto_rig = std::make_unique<RigServer>(
            parse_rig_config(io::read_file(config.rig_config_path)), config.rig_port);
        rig_url = auto_rig->url();
    }
    HttpRigPort port(rig_url);
    RunStageOutput run = stage_run(config, port);
    int64_t t4 = clock.now_ms();

    run.timings.ingest_ms = t1 - t0;
    run.timings.match_ms = t2 - t1;
    run.timings.gen_ms = t3 - t2;
    run.timings.run_ms = t4 - t3;
    run.timings.total_ms = t4 - t0;
    write_run(config, run);

    ReportInputs inputs;
    inputs.backend = env.backend->name();
    inputs.strictness = to_string(config.strictness);
    inputs.results = matched.results;
    inputs.skipped = gen.skipped;
    inputs.cases = gen.cases;
    inputs.run = run;
    if (!config.manifest_path.empty()) inputs.manifest = load_manifest(config.manifest_path);

    E2eResult result;
    result.report = build_report(inputs);
    write_report(config, result.report);

    bool all_pass = result.report.metrics.pass_rate == 1.0;
    bool no_errors = result.report.errored_apis.empty();
    for (const auto& v : result.report.verdicts)
        for (const auto& c : v.case_outcomes) no_errors &= c.verdict != Verdict::error;
    result.exit_code = (all_pass && no_errors) ? 0 : 1;
    return result;
}

}  // namespace vapitest
