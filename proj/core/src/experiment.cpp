#include "margin_bench/experiment.hpp"

#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "margin_bench/error.hpp"

namespace margin_bench {

namespace {

[[noreturn]] void usage_error(const std::string& what) { throw Error(ErrorKind::usage, "harness", what); }

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) usage_error("'" + key + "' expects a number, got '" + value + "'");
    return out;
}

template <typename Int>
Int to_integer(const std::string& key, const std::string& value) {
    Int out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) usage_error("'" + key + "' expects an integer, got '" + value + "'");
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ull) {
    for (const unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string strategies_text(const std::vector<Strategy>& strategies) {
    std::string out;
    for (const auto s : strategies) {
        if (!out.empty()) out += ",";
        out += to_string(s);
    }
    return out;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (data_path.empty()) usage_error("data.path is not set");
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) usage_error("split.test_fraction must lie in [0, 1]");
    mf.validate();
    profit.validate();
    RerankConfig{-std::numeric_limits<double>::infinity(), n}.validate();
    PurchaseModel::relevance_decay(lambda, r_max).validate();
    if (r_max < kRatingCeiling) usage_error("purchase.r_max must be >= 5 (the clamp ceiling)");
    (void)grid();
    if (strategies.empty()) usage_error("run.strategies is empty");
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    if (key == "data.path") data_path = value;
    else if (key == "data.format") data_format = parse_rating_format(value);
    else if (key == "split.test_fraction") test_fraction = to_double(key, value);
    else if (key == "split.seed") split_seed = to_integer<std::uint64_t>(key, value);
    else if (key == "mf.k") mf.k = to_integer<int>(key, value);
    else if (key == "mf.epochs") mf.epochs = to_integer<int>(key, value);
    else if (key == "mf.learning_rate") mf.learning_rate = to_double(key, value);
    else if (key == "mf.regularization") mf.regularization = to_double(key, value);
    else if (key == "mf.init_scale") mf.init_scale = to_double(key, value);
    else if (key == "mf.seed") mf.seed = to_integer<std::uint64_t>(key, value);
    else if (key == "profit.mean") profit.mean = to_double(key, value);
    else if (key == "profit.min") profit.min = to_double(key, value);
    else if (key == "profit.max") profit.max = to_double(key, value);
    else if (key == "profit.sigma") profit.sigma = to_double(key, value);
    else if (key == "profit.seed") profit.seed = to_integer<std::uint64_t>(key, value);
    else if (key == "rerank.n") n = to_integer<std::size_t>(key, value);
    else if (key == "rerank.grid_start") grid_start = to_double(key, value);
    else if (key == "rerank.grid_stop") grid_stop = to_double(key, value);
    else if (key == "rerank.grid_step") grid_step = to_double(key, value);
    else if (key == "purchase.lambda") lambda = to_double(key, value);
    else if (key == "purchase.r_max") r_max = to_double(key, value);
    else if (key == "eval.relevant_rating") relevant_rating = to_double(key, value);
    else if (key == "run.strategies") {
        std::vector<Strategy> parsed;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) parsed.push_back(parse_strategy(item));
        }
        strategies = std::move(parsed);
    } else if (key == "run.out") out_dir = value;
    else usage_error("unknown configuration key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
    return {
        {"data.path", data_path.string()},
        {"data.format", std::string(to_string(data_format))},
        {"split.test_fraction", format_double(test_fraction)},
        {"split.seed", std::to_string(split_seed)},
        {"mf.k", std::to_string(mf.k)},
        {"mf.epochs", std::to_string(mf.epochs)},
        {"mf.learning_rate", format_double(mf.learning_rate)},
        {"mf.regularization", format_double(mf.regularization)},
        {"mf.init_scale", format_double(mf.init_scale)},
        {"mf.seed", std::to_string(mf.seed)},
        {"profit.mean", format_double(profit.mean)},
        {"profit.min", format_double(profit.min)},
        {"profit.max", format_double(profit.max)},
        {"profit.sigma", format_double(profit.sigma)},
        {"profit.seed", std::to_string(profit.seed)},
        {"rerank.n", std::to_string(n)},
        {"rerank.grid_start", format_double(grid_start)},
        {"rerank.grid_stop", format_double(grid_stop)},
        {"rerank.grid_step", format_double(grid_step)},
        {"purchase.lambda", format_double(lambda)},
        {"purchase.r_max", format_double(r_max)},
        {"eval.relevant_rating", format_double(relevant_rating)},
        {"run.strategies", strategies_text(strategies)},
        {"run.out", out_dir.string()},
    };
}

std::uint64_t ExperimentConfig::fingerprint() const {
    std::uint64_t hash = fnv1a("");
    for (const auto& [key, value] : entries()) {
        if (key == "run.out") continue;
        hash = fnv1a(key + "=" + value + "\n", hash);
    }
    return hash;
}

EvalOptions ExperimentConfig::eval_options(unsigned threads) const {
    EvalOptions options;
    options.n = n;
    options.relevant_rating = relevant_rating;
    options.relevance = PurchaseModel::relevance_decay(lambda, r_max);
    options.threads = threads;
    return options;
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    ExperimentConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) usage_error("config line " + std::to_string(line_no) + ": expected 'key = value'");
        try {
            config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(e.kind(), "harness", "config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!config.data_path.empty() && config.data_path.is_relative() && !base_dir.empty()) {
        config.data_path = (base_dir / config.data_path).lexically_normal();
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::data, "harness", "cannot open config '" + path.string() + "'");
    return parse_config(in, path.parent_path());
}

void write_config(const ExperimentConfig& config, std::ostream& out) {
    for (const auto& [key, value] : config.entries()) out << key << " = " << value << "\n";
}

std::string default_config_text() {
    ExperimentConfig config;
    config.data_path = "ml-1m/ratings.dat";
    std::ostringstream out;
    out << "# margin-bench experiment configuration\n"
           "# data.format: movielens-1m | movielens-100k | csv\n"
           "# relative data.path is resolved against this file's directory\n"
           "# run.strategies: comma-separated subset of baseline, profit-rerank, expected-margin\n"
           "# every key can be overridden on the command line, e.g. --mf.k=16\n";
    write_config(config, out);
    return out.str();
}

RunSummary run_experiment(const ExperimentConfig& config, unsigned threads, std::ostream& log) {
    using Clock = std::chrono::steady_clock;
    const auto seconds_since = [](Clock::time_point t0) {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    };
    config.validate();
    const auto started = Clock::now();
    nlohmann::json timings;

    auto t0 = Clock::now();
    const InteractionSet data = load_ratings(config.data_path, config.data_format);
    timings["load"] = seconds_since(t0);
    log << "loaded " << data.size() << " ratings (" << data.n_users() << " users, " << data.n_items() << " items)\n";

    t0 = Clock::now();
    const Split split = split_holdout(data, config.test_fraction, config.split_seed);
    timings["split"] = seconds_since(t0);

    t0 = Clock::now();
    const FactorModel model = train(split.train, config.mf);
    timings["train"] = seconds_since(t0);

    RunSummary summary;
    summary.train_rmse = rmse(model, split.train);
    summary.test_rmse = rmse(model, split.test);
    {
        const double mu = split.train.mean_rating();
        double sse = 0.0;
        for (const auto& x : split.test.interactions()) sse += (x.rating - mu) * (x.rating - mu);
        summary.global_mean_test_rmse =
            split.test.empty() ? 0.0 : std::sqrt(sse / static_cast<double>(split.test.size()));
    }
    log << "trained: train rmse " << summary.train_rmse << ", test rmse " << summary.test_rmse
        << " (global mean " << summary.global_mean_test_rmse << ")\n";

    const ProfitTable profits = assign_profits(data.n_items(), config.profit);

    std::filesystem::create_directories(config.out_dir);
    const auto out = [&](const std::string& name) {
        summary.artifacts.push_back(config.out_dir / name);
        return config.out_dir / name;
    };
    save_model(model, out("model.bin"));
    write_profits_csv(profits, data.items(), out("profits.csv"));

    const std::uint64_t fingerprint = config.fingerprint();
    const Evaluator evaluator(model, profits, split, config.eval_options(threads));
    const auto grid = config.grid();
    nlohmann::json results;
    t0 = Clock::now();
    for (const Strategy strategy : config.strategies) {
        SweepResult sweep = sweep_thresholds(evaluator, strategy, grid);
        sweep.fingerprint = fingerprint;
        const std::string name = "sweep_" + std::string(to_string(strategy)) + ".csv";
        write_sweep_csv(sweep, out(name));

        nlohmann::json entry;
        entry["csv"] = name;
        entry["baseline_avg_profit_guaranteed"] = sweep.baseline.avg_profit_guaranteed;
        entry["baseline_avg_profit_relevance"] = sweep.baseline.avg_profit_relevance;
        entry["baseline_precision_at_n"] = sweep.baseline.precision_at_n;
        if (const auto best = find_optimal_threshold(sweep, ProfitObjective::relevance)) {
            entry["optimal_threshold_relevance"] = {{"threshold", best->threshold}, {"profit", best->profit}};
        }
        if (const auto best = find_optimal_threshold(sweep, ProfitObjective::guaranteed)) {
            entry["optimal_threshold_guaranteed"] = {{"threshold", best->threshold}, {"profit", best->profit}};
        }
        results[std::string(to_string(strategy))] = entry;
        log << "wrote " << name << " (" << sweep.points.size() << " points)\n";
        summary.sweeps.push_back(std::move(sweep));
    }
    timings["evaluate"] = seconds_since(t0);

    {
        std::ofstream cfg_out(out("config.cfg"));
        write_config(config, cfg_out);
    }

    nlohmann::json manifest;
    manifest["tool"] = "margin-bench";
    manifest["fingerprint"] = hex64(fingerprint);
    nlohmann::json cfg;
    for (const auto& [key, value] : config.entries()) cfg[key] = value;
    manifest["config"] = cfg;
    manifest["seeds"] = {{"split", config.split_seed}, {"mf", config.mf.seed}, {"profit", config.profit.seed}};
    manifest["data"] = {{"ratings", data.size()}, {"users", data.n_users()}, {"items", data.n_items()},
                        {"train", split.train.size()}, {"test", split.test.size()}};
    manifest["model"] = {{"train_rmse", summary.train_rmse},
                         {"test_rmse", summary.test_rmse},
                         {"global_mean_test_rmse", summary.global_mean_test_rmse}};
    manifest["results"] = results;
    manifest["evaluated_users"] = evaluator.users().size();
    manifest["threads"] = threads;
    timings["total"] = seconds_since(started);
    manifest["wall_clock_seconds"] = timings;
    nlohmann::json artifact_names = nlohmann::json::array();
    for (const auto& path : summary.artifacts) artifact_names.push_back(path.filename().string());
    artifact_names.push_back("manifest.json");
    manifest["artifacts"] = artifact_names;
    {
        std::ofstream manifest_out(out("manifest.json"));
        manifest_out << manifest.dump(2) << "\n";
        if (!manifest_out) throw Error(ErrorKind::data, "harness", "failed to write manifest");
    }
    return summary;
}

namespace {

struct CsvRow {
    std::vector<std::string> fields;
    std::vector<double> values;
};

bool near(double a, double b) { return std::abs(a - b) < 1e-9; }

}  // namespace

std::string report_sweep_csv(std::istream& csv) {
    static const std::string kHeader =
        "threshold,avg_profit_guaranteed,avg_profit_relevance,precision_at_n,accuracy_loss_pct,profit_gain_pct";
    const auto malformed = [](const std::string& what) { throw Error(ErrorKind::data, "harness", "malformed sweep CSV: " + what); };

    std::string line;
    if (!std::getline(csv, line)) malformed("empty input");
    if (trim(line) != kHeader) malformed("unexpected header");

    std::vector<CsvRow> rows;
    while (std::getline(csv, line)) {
        line = trim(line);
        if (line.empty()) continue;
        CsvRow row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.fields.push_back(trim(field));
        if (row.fields.size() != 6) malformed("row " + std::to_string(rows.size() + 2) + " has " + std::to_string(row.fields.size()) + " fields");
        for (const auto& f : row.fields) {
            // from_chars accepts "inf", "-inf" and "nan".
            double v = 0.0;
            const auto* end = f.data() + f.size();
            const auto [ptr, ec] = std::from_chars(f.data(), end, v);
            if (ec != std::errc{} || ptr != end) malformed("'" + f + "' is not a number");
            row.values.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) malformed("no baseline row");
    if (!(std::isinf(rows.front().values[0]) && rows.front().values[0] > 0)) malformed("first row is not the baseline (threshold inf)");

    std::ostringstream out;
    const CsvRow& base = rows.front();
    out << "baseline (no re-ranking): avg profit " << base.fields[1] << " (guaranteed purchase), " << base.fields[2]
        << " (relevance-based purchase), precision@n " << base.fields[3] << "\n";

    if (rows.size() == 1) {
        out << "no sweep points\n";
        return out.str();
    }

    SweepResult sweep;
    for (std::size_t j = 1; j < rows.size(); ++j) {
        EvalPoint p;
        p.threshold = rows[j].values[0];
        p.avg_profit_guaranteed = rows[j].values[1];
        p.avg_profit_relevance = rows[j].values[2];
        sweep.points.push_back(p);
    }
    const auto row_for = [&](double threshold) -> const CsvRow* {
        for (std::size_t j = 1; j < rows.size(); ++j) {
            if (rows[j].values[0] == threshold || near(rows[j].values[0], threshold)) return &rows[j];
        }
        return nullptr;
    };
    for (const auto& [objective, label, column] :
         {std::tuple{ProfitObjective::guaranteed, "guaranteed purchase", 1},
          std::tuple{ProfitObjective::relevance, "relevance-based purchase", 2}}) {
        const auto best = find_optimal_threshold(sweep, objective);
        const CsvRow* row = row_for(best->threshold);
        out << "optimal threshold (" << label << "): " << row->fields[0] << " -> avg profit " << row->fields[column]
            << "\n";
    }
    for (const double t : {4.5, 4.0}) {
        char name[32];
        std::snprintf(name, sizeof name, "%.1f", t);
        out << "T_R = " << name << ": ";
        if (const CsvRow* row = row_for(t)) {
            out << "profit gain " << row->fields[5] << "%, accuracy loss " << row->fields[4] << "%\n";
        } else {
            out << "not in grid\n";
        }
    }
    return out.str();
}

std::string report_sweep_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::data, "harness", "cannot open '" + path.string() + "'");
    return report_sweep_csv(in);
}

}  // namespace margin_bench
