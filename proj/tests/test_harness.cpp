#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "margin_bench/error.hpp"
#include "margin_bench/experiment.hpp"

using namespace margin_bench;
namespace fs = std::filesystem;

namespace {

const fs::path kData = MARGIN_BENCH_TEST_DATA;

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("margin_bench_test_" + name);
    fs::remove_all(dir);
    return dir;
}

ExperimentConfig fixture_config(const std::string& out) {
    auto config = load_config(kData / "fixture.cfg");
    config.out_dir = scratch(out);
    return config;
}

}  // namespace

TEST_CASE("config parsing") {
    std::istringstream text(
        "# comment\n"
        "data.path = ratings.dat\n"
        "mf.k = 16   # trailing comment\n"
        "run.strategies = baseline, profit-rerank\n");
    const auto config = parse_config(text, "/base");
    CHECK(config.data_path == fs::path("/base/ratings.dat"));
    CHECK(config.mf.k == 16);
    CHECK(config.mf.epochs == 20);
    CHECK(config.strategies == std::vector<Strategy>{Strategy::baseline, Strategy::profit_rerank});

    ExperimentConfig c;
    c.set("rerank.grid_step", "0.5");
    CHECK(c.grid_step == 0.5);
    CHECK_THROWS_AS(c.set("mf.depth", "3"), Error);
    CHECK_THROWS_AS(c.set("mf.k", "many"), Error);

    std::istringstream broken("mf.k 16\n");
    CHECK_THROWS_AS(parse_config(broken), Error);
}

TEST_CASE("config round-trips and fingerprints") {
    ExperimentConfig config;
    config.data_path = "/data/ratings.dat";
    std::stringstream buf;
    write_config(config, buf);
    const auto back = parse_config(buf);
    CHECK(back.entries() == config.entries());
    CHECK(back.fingerprint() == config.fingerprint());

    ExperimentConfig moved = config;
    moved.out_dir = "elsewhere";
    CHECK(moved.fingerprint() == config.fingerprint());
    ExperimentConfig tweaked = config;
    tweaked.mf.k = 8;
    CHECK(tweaked.fingerprint() != config.fingerprint());

    std::istringstream defaults(default_config_text());
    CHECK(parse_config(defaults).mf.k == 32);
}

TEST_CASE("end-to-end fixture run") {
    const auto config = fixture_config("run_a");
    std::ostringstream log;
    const auto started = std::chrono::steady_clock::now();
    const auto summary = run_experiment(config, 1, log);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    CHECK(elapsed < 5.0);

    for (const char* name : {"model.bin", "profits.csv", "sweep_baseline.csv", "sweep_profit-rerank.csv",
                             "sweep_expected-margin.csv", "config.cfg", "manifest.json"}) {
        CHECK_MESSAGE(fs::exists(config.out_dir / name), name);
    }
    REQUIRE(summary.sweeps.size() == 3);
    CHECK(summary.sweeps[1].points.size() == 31);
    CHECK(summary.test_rmse > 0.0);

    // Artifacts agree with each other.
    const auto model = load_model(config.out_dir / "model.bin");
    const auto data = load_ratings(config.data_path, config.data_format);
    CHECK(model.n_items() == data.n_items());
    CHECK(model.n_users() == data.n_users());
    const auto profits = read_profits_csv(config.out_dir / "profits.csv", data.items());
    const auto regenerated = assign_profits(data.n_items(), config.profit);
    for (std::size_t i = 0; i < profits.size(); ++i) CHECK(std::abs(profits.profit[i] - regenerated.profit[i]) <= 5e-7);

    // The written config reproduces the run.
    const auto reloaded = load_config(config.out_dir / "config.cfg");
    CHECK(reloaded.fingerprint() == config.fingerprint());

    SUBCASE("identical reruns and thread counts") {
        auto again = fixture_config("run_b");
        std::ostringstream quiet;
        run_experiment(again, 4, quiet);
        for (const char* name : {"model.bin", "profits.csv", "sweep_profit-rerank.csv", "sweep_expected-margin.csv"}) {
            CHECK_MESSAGE(slurp(config.out_dir / name) == slurp(again.out_dir / name), name);
        }
    }
}

TEST_CASE("missing data file is a data error naming the path") {
    auto config = fixture_config("missing");
    config.data_path = kData / "no_such_file.dat";
    std::ostringstream log;
    try {
        run_experiment(config, 1, log);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::data);
        CHECK(std::string(e.what()).find("no_such_file.dat") != std::string::npos);
    }
}

TEST_CASE("report") {
    const std::string header =
        "threshold,avg_profit_guaranteed,avg_profit_relevance,precision_at_n,accuracy_loss_pct,profit_gain_pct\n";
    SUBCASE("values are shown verbatim") {
        std::istringstream csv(header +
                               "inf,2.000000,1.300000,0.100000,0.000000,0.000000\n"
                               "4.600000,2.800000,1.350000,0.099000,1.000000,40.000000\n"
                               "4.500000,3.042000,1.400000,0.098700,1.300000,52.100000\n"
                               "4.400000,3.100000,1.380000,0.090000,10.000000,55.000000\n");
        const auto text = report_sweep_csv(csv);
        CHECK(text.find("T_R = 4.5: profit gain 52.100000%, accuracy loss 1.300000%") != std::string::npos);
        CHECK(text.find("optimal threshold (relevance-based purchase): 4.500000") != std::string::npos);
        CHECK(text.find("optimal threshold (guaranteed purchase): 4.400000") != std::string::npos);
        CHECK(text.find("T_R = 4.0: not in grid") != std::string::npos);
    }
    SUBCASE("baseline only") {
        std::istringstream csv(header + "inf,2.000000,1.300000,0.100000,0.000000,0.000000\n");
        CHECK(report_sweep_csv(csv).find("no sweep points") != std::string::npos);
    }
    SUBCASE("malformed") {
        std::istringstream no_header("inf,1,1,1,0,0\n");
        CHECK_THROWS_AS(report_sweep_csv(no_header), Error);
        std::istringstream short_row(header + "inf,2.0,1.3\n");
        CHECK_THROWS_AS(report_sweep_csv(short_row), Error);
        std::istringstream junk(header + "inf,2.0,abc,0.1,0,0\n");
        CHECK_THROWS_AS(report_sweep_csv(junk), Error);
        CHECK_THROWS_AS(report_sweep_csv(fs::path("/nonexistent/sweep.csv")), Error);
    }
}
