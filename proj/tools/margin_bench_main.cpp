// margin-bench: profit-aware top-N re-ranking experiments.
//
//   margin-bench run --config exp.cfg [--out DIR] [--seed N] [--mf.k=16 ...]
//   margin-bench report sweep_profit-rerank.csv
//   margin-bench gen-config > exp.cfg

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "margin_bench/error.hpp"
#include "margin_bench/experiment.hpp"

namespace mb = margin_bench;

namespace {

unsigned threads_from_env() {
    const char* raw = std::getenv("MARGIN_BENCH_THREADS");
    if (!raw || !*raw) return 0;
    char* end = nullptr;
    const unsigned long value = std::strtoul(raw, &end, 10);
    if (*end != '\0') throw mb::Error(mb::ErrorKind::usage, "harness", "MARGIN_BENCH_THREADS must be an integer");
    return static_cast<unsigned>(value);
}

// Turns leftover "--key=value" / "--key value" tokens into config overrides.
void apply_overrides(mb::ExperimentConfig& config, const std::vector<std::string>& extras) {
    for (std::size_t j = 0; j < extras.size(); ++j) {
        const std::string& token = extras[j];
        if (!token.starts_with("--") || token.size() <= 2) {
            throw mb::Error(mb::ErrorKind::usage, "harness", "unexpected argument '" + token + "'");
        }
        std::string key = token.substr(2);
        std::string value;
        if (const auto eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key.resize(eq);
        } else if (j + 1 < extras.size()) {
            value = extras[++j];
        } else {
            throw mb::Error(mb::ErrorKind::usage, "harness", "override '" + token + "' has no value");
        }
        config.set(key, value);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Profit-aware top-N re-ranking experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Train, re-rank and sweep thresholds; write artifacts");
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    run->add_option("--config", config_path, "Experiment config file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides run.out)");
    run->add_option("--seed", seed, "Seed for split, training and profits");
    run->allow_extras();

    auto* report = app.add_subcommand("report", "Summarize a sweep CSV");
    std::string csv_path;
    report->add_option("csv", csv_path, "Sweep CSV written by 'run'")->required();

    app.add_subcommand("gen-config", "Print a default config to stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) {
            mb::ExperimentConfig config = mb::load_config(config_path);
            apply_overrides(config, run->remaining());
            if (!out_dir.empty()) config.out_dir = out_dir;
            if (seed) {
                config.split_seed = *seed;
                config.mf.seed = *seed;
                config.profit.seed = *seed;
            }
            mb::run_experiment(config, threads_from_env(), std::cerr);
            std::cerr << "artifacts in " << config.out_dir.string() << "\n";
        } else if (report->parsed()) {
            std::cout << mb::report_sweep_csv(std::filesystem::path(csv_path));
        } else {
            std::cout << mb::default_config_text();
        }
    } catch (const mb::Error& e) {
        std::cerr << "margin-bench: " << e.what() << "\n";
        return mb::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "margin-bench: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
