#include <benchmark/benchmark.h>

#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "margin_bench/evaluate.hpp"
#include "margin_bench/factor.hpp"
#include "margin_bench/profitgen.hpp"
#include "margin_bench/rerank.hpp"

using namespace margin_bench;

namespace {

// Dense-ish synthetic ratings shaped like a small MovieLens slice.
InteractionSet synthetic_ratings(std::size_t users, std::size_t items, double density, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> rating(1, 5);
    auto user_ids = std::make_shared<IdIndex>();
    auto item_ids = std::make_shared<IdIndex>();
    for (std::size_t u = 0; u < users; ++u) user_ids->intern(static_cast<std::int64_t>(u + 1));
    for (std::size_t i = 0; i < items; ++i) item_ids->intern(static_cast<std::int64_t>(i + 1));
    std::vector<Interaction> xs;
    for (std::size_t u = 0; u < users; ++u) {
        for (std::size_t i = 0; i < items; ++i) {
            if (unit(rng) >= density) continue;
            Interaction x;
            x.user_id = static_cast<std::int64_t>(u + 1);
            x.item_id = static_cast<std::int64_t>(i + 1);
            x.user = static_cast<UserIndex>(u);
            x.item = static_cast<ItemIndex>(i);
            x.rating = rating(rng);
            xs.push_back(x);
        }
    }
    return InteractionSet(std::move(xs), user_ids, item_ids);
}

RankedList synthetic_candidates(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pred(1.0, 5.0);
    RankedList list;
    for (std::size_t j = 0; j < count; ++j) list.entries.push_back({static_cast<ItemIndex>(j), pred(rng)});
    std::sort(list.entries.begin(), list.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        return a.predicted != b.predicted ? a.predicted > b.predicted : a.item < b.item;
    });
    return list;
}

}  // namespace

static void BM_RerankByProfit(benchmark::State& state) {
    const auto count = static_cast<std::size_t>(state.range(0));
    const auto ranked = synthetic_candidates(count, 1);
    const auto profits = assign_profits(count, ProfitConfig{});
    const RerankConfig cfg{4.0, 10};
    for (auto _ : state) benchmark::DoNotOptimize(rerank_by_profit(ranked, profits, cfg));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(count));
}
BENCHMARK(BM_RerankByProfit)->Arg(100)->Arg(1000)->Arg(3700);

static void BM_ExpectedMargin(benchmark::State& state) {
    const auto count = static_cast<std::size_t>(state.range(0));
    const auto ranked = synthetic_candidates(count, 2);
    const auto profits = assign_profits(count, ProfitConfig{});
    const auto pm = PurchaseModel::relevance_decay(1.0);
    for (auto _ : state) benchmark::DoNotOptimize(rank_by_expected_margin(ranked, profits, pm, 10));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(count));
}
BENCHMARK(BM_ExpectedMargin)->Arg(1000)->Arg(3700);

static void BM_TrainEpoch(benchmark::State& state) {
    const auto data = synthetic_ratings(500, 800, 0.05, 3);
    Hyperparams hp;
    hp.epochs = 1;
    hp.k = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(train(data, hp));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_RankCandidates(benchmark::State& state) {
    const auto data = synthetic_ratings(50, 3700, 0.02, 4);
    Hyperparams hp;
    hp.epochs = 1;
    const auto model = train(data, hp);
    const UserItems rated(data);
    UserIndex user = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rank_candidates(model, user, rated));
        user = (user + 1) % 50;
    }
}
BENCHMARK(BM_RankCandidates)->Unit(benchmark::kMicrosecond);

static void BM_ThresholdSweep(benchmark::State& state) {
    const auto data = synthetic_ratings(300, 1000, 0.05, 5);
    const auto split = split_holdout(data, 0.2, 5);
    Hyperparams hp;
    hp.epochs = 5;
    hp.k = 8;
    const auto model = train(split.train, hp);
    const auto profits = assign_profits(data.n_items(), ProfitConfig{});
    EvalOptions options;
    options.threads = static_cast<unsigned>(state.range(0));
    const Evaluator evaluator(model, profits, split, options);
    const auto grid = threshold_grid(5.0, 2.0, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(sweep_thresholds(evaluator, Strategy::profit_rerank, grid));
}
BENCHMARK(BM_ThresholdSweep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_MAIN();
