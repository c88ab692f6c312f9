#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "margin_bench/dataio.hpp"
#include "margin_bench/evaluate.hpp"
#include "margin_bench/factor.hpp"
#include "margin_bench/profitgen.hpp"
#include "margin_bench/purchase.hpp"
#include "margin_bench/rerank.hpp"

namespace margin_bench {

/// Everything a run depends on. Serialized as flat `section.key = value`
/// lines; see gen-config output for the full key list.
struct ExperimentConfig {
    std::filesystem::path data_path;
    RatingFormat data_format = RatingFormat::movielens_1m;

    double test_fraction = 0.2;
    std::uint64_t split_seed = 42;

    Hyperparams mf;
    ProfitConfig profit;

    std::size_t n = 10;
    double grid_start = 5.0;
    double grid_stop = 2.0;
    double grid_step = 0.1;

    double lambda = 1.0;
    double r_max = kRatingCeiling;
    double relevant_rating = 4.0;

    std::vector<Strategy> strategies{Strategy::baseline, Strategy::profit_rerank, Strategy::expected_margin};
    std::filesystem::path out_dir = "margin-bench-out";

    void validate() const;

    /// Applies one `key = value` assignment. Throws Error(usage) for unknown
    /// keys or unparsable values.
    void set(const std::string& key, const std::string& value);

    /// Canonical key/value pairs in a fixed order.
    std::vector<std::pair<std::string, std::string>> entries() const;

    /// FNV-1a over the canonical entries, excluding the output directory.
    std::uint64_t fingerprint() const;

    std::vector<double> grid() const { return threshold_grid(grid_start, grid_stop, grid_step); }
    EvalOptions eval_options(unsigned threads) const;
};

/// Parses `key = value` lines (`#` starts a comment). Relative data paths are
/// resolved against `base_dir`.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

void write_config(const ExperimentConfig& config, std::ostream& out);

/// Commented default configuration, as printed by `gen-config`.
std::string default_config_text();

struct RunSummary {
    std::vector<SweepResult> sweeps;
    double train_rmse = 0.0;
    double test_rmse = 0.0;
    double global_mean_test_rmse = 0.0;
    std::vector<std::filesystem::path> artifacts;
};

/// load -> split -> train -> profits -> sweeps, writing the model dump,
/// profit CSV, one sweep CSV per strategy, the resolved config and a JSON
/// manifest into `config.out_dir`. Progress lines go to `log`.
RunSummary run_experiment(const ExperimentConfig& config, unsigned threads, std::ostream& log);

/// Human-readable summary of a sweep CSV.
std::string report_sweep_csv(std::istream& csv);
std::string report_sweep_csv(const std::filesystem::path& path);

}  // namespace margin_bench
