// SPDX-License-Identifier: Apache-2.0
//
// vapitest — automated vehicle-API test pipeline.
//
//   vapitest e2e    full workflow: ingest, match, generate, run, report
//   vapitest ingest / match / gen / run / report   individual stages
//   vapitest rig    serve a standalone simulated rig
//   vapitest forge  generate a labeled evaluation corpus

#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "vapitest/corpus.hpp"
#include "vapitest/pipeline.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void handle_signal(int) { g_stop = 1; }

void add_backend_flags(CLI::App* cmd, vapitest::PipelineConfig& config,
                       std::string& strictness) {
    cmd->add_option("--strictness", strictness, "strict|moderate|relaxed")
        ->check(CLI::IsMember({"strict", "moderate", "relaxed"}));
    cmd->add_option("--backend", config.backend_kind, "rules|remote|replay|record")
        ->check(CLI::IsMember({"rules", "remote", "replay", "record"}));
    cmd->add_option("--backend-url", config.backend_url,
                    "completion endpoint for remote/record backends");
    cmd->add_option("--replay-store", config.replay_store,
                    "request/response store for replay and record backends");
    cmd->add_option("--backend-parallelism", config.backend_parallelism,
                    "max in-flight backend requests");
    cmd->add_option("--units", config.units_path, "units registry TSV override")
        ->check(CLI::ExistingFile);
    cmd->add_option("--synonyms", config.synonyms_path, "synonym lexicon override")
        ->check(CLI::ExistingFile);
    cmd->add_option("--antonyms", config.antonyms_path, "antonym lexicon override")
        ->check(CLI::ExistingFile);
    cmd->add_option("--boolean-lexicon", config.boolean_path,
                    "boolean state lexicon override")
        ->check(CLI::ExistingFile);
}

int run_report_stage(const vapitest::PipelineConfig& config) {
    using namespace vapitest;
    auto matched = load_matches(config.out_dir);
    json m = json::parse(io::read_file(config.out_dir + "/matches.rec"));

    ReportInputs inputs;
    inputs.backend = m.value("backend", "rules");
    inputs.strictness = m.value("strictness", "moderate");
    inputs.results = matched.results;
    inputs.skipped = matched.skipped;
    inputs.cases = load_cases(config.out_dir);
    inputs.run = load_run(config.out_dir);
    if (!config.manifest_path.empty()) inputs.manifest = load_manifest(config.manifest_path);

    RunReport report = build_report(inputs);
    write_report(config, report);
    std::cout << emit_report(report, ReportFormat::human_text);
    bool ok = report.metrics.pass_rate == 1.0 && report.errored_apis.empty();
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace vapitest;
    CLI::App app{"automated vehicle-API test pipeline"};
    app.require_subcommand(1);

    PipelineConfig config;
    std::string strictness = "moderate";

    // e2e
    auto* e2e = app.add_subcommand("e2e", "run the full pipeline");
    e2e->add_option("--spec", config.spec_path, "API specification file")
        ->required()
        ->check(CLI::ExistingFile);
    e2e->add_option("--can-table", config.can_path, "CAN signal table")
        ->required()
        ->check(CLI::ExistingFile);
    e2e->add_option("--vv-table", config.vv_path, "Virtual Vehicle table")
        ->required()
        ->check(CLI::ExistingFile);
    e2e->add_option("--rig", config.rig, "auto | rig base URL");
    e2e->add_option("--rig-config", config.rig_config_path, "rig config for --rig auto")
        ->check(CLI::ExistingFile);
    e2e->add_option("--rig-port", config.rig_port,
                    "port for the auto rig (0 picks a free one)");
    e2e->add_option("--out", config.out_dir, "output directory");
    e2e->add_option("--manifest", config.manifest_path,
                    "corpus manifest for ground-truth metrics")
        ->check(CLI::ExistingFile);
    add_backend_flags(e2e, config, strictness);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse a spec into test object sets");
    ingest->add_option("--spec", config.spec_path, "API specification file")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--out", config.out_dir, "output directory");

    // match
    auto* match = app.add_subcommand("match", "map test objects to CAN and VV");
    match->add_option("--can-table", config.can_path, "CAN signal table")
        ->required()
        ->check(CLI::ExistingFile);
    match->add_option("--vv-table", config.vv_path, "Virtual Vehicle table")
        ->required()
        ->check(CLI::ExistingFile);
    match->add_option("--out", config.out_dir, "output directory (with objects.rec)");
    add_backend_flags(match, config, strictness);

    // gen
    auto* gen = app.add_subcommand("gen", "generate test cases and a plan");
    gen->add_option("--out", config.out_dir, "output directory (with matches.rec)");
    gen->add_option("--rig", config.rig, "rig address stamped into the plan");

    // run
    auto* run = app.add_subcommand("run", "execute a plan against a rig");
    run->add_option("--out", config.out_dir, "output directory (with plan.txt)");
    run->add_option("--rig", config.rig, "rig base URL, or auto with --rig-config");
    run->add_option("--rig-config", config.rig_config_path, "rig config for --rig auto")
        ->check(CLI::ExistingFile);

    // report
    auto* report = app.add_subcommand("report", "rebuild reports from a stored run");
    report->add_option("--out", config.out_dir, "output directory (with run.rec)");
    report->add_option("--manifest", config.manifest_path,
                       "corpus manifest for ground-truth metrics")
        ->check(CLI::ExistingFile);

    // rig
    auto* rig_cmd = app.add_subcommand("rig", "serve a standalone simulated rig");
    std::string rig_config_path;
    int rig_port = 0;
    rig_cmd->add_option("--config", rig_config_path, "rig config file")
        ->required()
        ->check(CLI::ExistingFile);
    rig_cmd->add_option("--port", rig_port, "port (0 = auto)");

    // forge
    auto* forge_cmd = app.add_subcommand("forge", "generate a labeled corpus");
    uint64_t seed = 1;
    std::string profile = "clean";
    int size = 10;
    int faults = 0;
    std::string forge_out = "corpus";
    forge_cmd->add_option("--seed", seed, "corpus seed");
    forge_cmd->add_option("--profile", profile,
                          "clean|fuzzy5|pseudocode|units|dependencies|mixed")
        ->check(CLI::IsMember(
            {"clean", "fuzzy5", "pseudocode", "units", "dependencies", "mixed"}));
    forge_cmd->add_option("--size", size, "number of APIs");
    forge_cmd->add_option("--faults", faults, "number of seeded faults");
    forge_cmd->add_option("--out", forge_out, "corpus directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        config.strictness = strictness_from_string(strictness);

        if (e2e->parsed()) {
            SteadyClock clock;
            E2eResult result = run_e2e(config, clock);
            std::cout << emit_report(result.report, ReportFormat::human_text);
            return result.exit_code;
        }
        if (ingest->parsed()) {
            auto sets = stage_ingest(config);
            std::cout << "extracted " << sets.size() << " test object set(s) to "
                      << config.out_dir << "/objects.rec\n";
            return 0;
        }
        if (match->parsed()) {
            PipelineEnv env = make_env(config);
            auto sets = load_objects(config.out_dir);
            auto out = stage_match(env, config, sets);
            std::cout << "matched " << out.results.size() << " chain(s), skipped "
                      << out.skipped.size() << "\n";
            return 0;
        }
        if (gen->parsed()) {
            auto matched = load_matches(config.out_dir);
            auto out = stage_gen(config, matched);
            std::cout << "generated " << out.cases.size() << " case(s) into "
                      << config.out_dir << "/plan.txt\n";
            return 0;
        }
        if (run->parsed()) {
            std::unique_ptr<RigServer> auto_rig;
            std::string rig_url = config.rig;
            if (config.rig == "auto") {
                if (config.rig_config_path.empty())
                    throw ConfigError("--rig auto needs --rig-config");
                auto_rig = std::make_unique<RigServer>(
                    parse_rig_config(io::read_file(config.rig_config_path)));
                rig_url = auto_rig->url();
            }
            HttpRigPort port(rig_url);
            RunStageOutput out = stage_run(config, port);
            write_run(config, out);
            size_t failed = 0, errored = 0;
            for (const auto& o : out.outcomes) {
                failed += o.verdict == Verdict::fail ? 1 : 0;
                errored += o.verdict == Verdict::error ? 1 : 0;
            }
            std::cout << out.outcomes.size() << " case(s): " << failed << " failed, "
                      << errored << " errored\n";
            return failed == 0 && errored == 0 ? 0 : 1;
        }
        if (report->parsed()) return run_report_stage(config);
        if (rig_cmd->parsed()) {
            RigServer server(parse_rig_config(io::read_file(rig_config_path)), rig_port);
            std::cout << "rig listening on " << server.url() << "\n" << std::flush;
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            return 0;
        }
        if (forge_cmd->parsed()) {
            Corpus corpus = forge(seed, corpus_profile_from_string(profile), size, faults);
            write_corpus(corpus, forge_out);
            std::cout << "corpus: " << corpus.spec.endpoints.size() << " API(s), "
                      << corpus.manifest.true_mappings.size() << " mapping(s), "
                      << corpus.manifest.unmappable.size() << " unmappable, "
                      << corpus.manifest.faults.size() << " fault(s) -> " << forge_out
                      << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
