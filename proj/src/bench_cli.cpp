#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "prepbench/bench.hpp"
#include "prepbench/dataset_io.hpp"
#include "prepbench/errors.hpp"

namespace prepbench::bench {

namespace {

// Single-line machine-readable error on stderr; callers can parse it.
int fail(const std::string& type, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = {{"type", type}, {"message", message}};
    std::cerr << j.dump() << "\n";
    return 1;
}

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const InvalidSpecError*>(&e)) return "invalid_spec";
    if (dynamic_cast<const ArgumentError*>(&e)) return "argument";
    if (dynamic_cast<const FitError*>(&e)) return "fit";
    if (dynamic_cast<const NumericError*>(&e)) return "numeric";
    if (dynamic_cast<const UndefinedMetricError*>(&e)) return "undefined_metric";
    if (dynamic_cast<const PreconditionError*>(&e)) return "precondition";
    if (dynamic_cast<const SchemaError*>(&e)) return "schema";
    if (dynamic_cast<const GenerationError*>(&e)) return "generation";
    if (dynamic_cast<const TuneError*>(&e)) return "tune";
    if (dynamic_cast<const IngestError*>(&e)) return "ingest";
    if (dynamic_cast<const ReportError*>(&e)) return "report";
    return "error";
}

}  // namespace

int cli(int argc, char** argv) {
    CLI::App app{"prepbench: preprocessing benchmark engine"};
    app.require_subcommand(1);

    std::string spec_path, out_dir, config_path, run_dir, csv_path, rules_path;
    std::uint64_t seed_override = 0;
    bool has_seed = false;

    auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
    gen->add_option("spec", spec_path, "Dataset spec JSON")->required();
    gen->add_option("dir", out_dir, "Output directory")->required();

    auto* run = app.add_subcommand("run", "Run a test/control experiment");
    run->add_option("config", config_path, "Experiment config JSON")->required();
    run->add_option("--seed", seed_override, "Override the master seed")
        ->each([&](const std::string&) { has_seed = true; });

    auto* rep = app.add_subcommand("report", "Rebuild report files from runs.json");
    rep->add_option("dir", run_dir, "Run directory")->required();

    auto* ing = app.add_subcommand("ingest", "Clean a real-world CSV into a dataset");
    ing->add_option("csv", csv_path, "Input CSV file")->required();
    ing->add_option("rules", rules_path, "Cleaning rules JSON")->required();
    ing->add_option("dir", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (gen->parsed()) {
            const auto spec = dataset_io::load_spec(spec_path);
            const auto ds = synthdata::generate_dataset(spec);
            dataset_io::write_dataset(ds, out_dir);
            std::cout << "wrote " << out_dir << " (" << ds.features.rows << " rows, "
                      << ds.features.cols << " features)\n";
        } else if (run->parsed()) {
            auto config = load_experiment_config(config_path);
            if (has_seed) config.master_seed = seed_override;
            const auto outcome = run_experiment(config);
            std::size_t failures = 0;
            for (const auto& r : outcome.results) failures += r.failed ? 1 : 0;
            std::cout << "completed " << outcome.results.size() << " arm-iterations ("
                      << failures << " failed)";
            if (!config.out_dir.empty()) std::cout << " -> " << config.out_dir;
            std::cout << "\n";
        } else if (rep->parsed()) {
            report(run_dir);
            std::cout << "report rebuilt in " << run_dir << "\n";
        } else if (ing->parsed()) {
            const auto rules = load_cleaning_rules(rules_path);
            const auto result = ingest_csv(csv_path, rules);
            dataset_io::write_dataset(result.dataset, out_dir);
            std::cout << "wrote " << out_dir << " (" << result.dataset.features.rows
                      << " rows, " << result.dataset.features.cols
                      << " numeric features, " << result.dataset.cat_columns.size()
                      << " categorical; skipped " << result.skipped_rows
                      << " rows, dropped " << result.dropped_columns.size()
                      << " columns)\n";
        }
    } catch (const std::exception& e) {
        return fail(error_type(e), e.what());
    }
    return 0;
}

}  // namespace prepbench::bench
