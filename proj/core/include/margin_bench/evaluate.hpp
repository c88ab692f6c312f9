#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "margin_bench/dataio.hpp"
#include "margin_bench/factor.hpp"
#include "margin_bench/profitgen.hpp"
#include "margin_bench/purchase.hpp"
#include "margin_bench/rerank.hpp"

namespace margin_bench {

struct EvalPoint {
    double threshold = 0.0;
    double avg_profit_guaranteed = 0.0;
    double avg_profit_relevance = 0.0;
    double precision_at_n = 0.0;
    double accuracy_loss_pct = 0.0;  // relative to baseline precision
    double profit_gain_pct = 0.0;    // relative to baseline guaranteed profit
    /// Evaluated users with fewer than n candidates at or above the threshold.
    std::size_t users_below_n_feasible = 0;

    friend bool operator==(const EvalPoint&, const EvalPoint&) = default;
};

struct SweepResult {
    Strategy strategy = Strategy::profit_rerank;
    EvalPoint baseline;             // threshold = +inf
    std::vector<EvalPoint> points;  // thresholds strictly decreasing
    std::uint64_t fingerprint = 0;

    friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

struct EvalOptions {
    std::size_t n = 10;
    /// Held-out ratings at or above this count as relevant for precision.
    double relevant_rating = 4.0;
    /// Model behind avg_profit_relevance and the expected-margin strategy.
    PurchaseModel relevance = PurchaseModel::relevance_decay(1.0);
    /// Worker threads across users; 0 picks hardware concurrency. Results do
    /// not depend on this value.
    unsigned threads = 1;
};

/// Hits among the first n list entries divided by n; nullopt when the user
/// has no relevant held-out items. `relevant` must be sorted ascending.
std::optional<double> precision_at_n(const RankedList& list, std::span<const ItemIndex> relevant, std::size_t n);

struct Setting {
    Strategy strategy = Strategy::baseline;
    double threshold = 0.0;  // used by profit-rerank only
};

/// Evaluates ranking settings over every user with held-out ratings. Each
/// user's candidate ranking is built once and shared by all settings.
class Evaluator {
public:
    Evaluator(const FactorModel& model, const ProfitTable& profits, const Split& split, EvalOptions options);

    /// One point per setting, percentages relative to the baseline strategy.
    std::vector<EvalPoint> evaluate(std::span<const Setting> settings) const;
    EvalPoint evaluate(Setting setting) const;

    const std::vector<UserIndex>& users() const noexcept { return users_; }
    const EvalOptions& options() const noexcept { return options_; }

    /// Per-user list produced by a setting (used by tests and reports).
    RankedList recommend(UserIndex user, Setting setting) const;
    RankedList candidates(UserIndex user) const;

private:
    const FactorModel& model_;
    const ProfitTable& profits_;
    EvalOptions options_;
    UserItems train_items_;
    UserItems relevant_items_;
    std::vector<UserIndex> users_;
};

EvalPoint evaluate_config(const FactorModel& model, const ProfitTable& profits, const Split& split, Setting setting,
                          const EvalOptions& options);

/// Baseline plus one point per grid threshold (sorted descending; duplicates
/// rejected). For expected-margin the grid is ignored and a single
/// unconstrained point (threshold -inf) is produced.
SweepResult sweep_thresholds(const Evaluator& evaluator, Strategy strategy, std::span<const double> grid);
SweepResult sweep_thresholds(const FactorModel& model, const ProfitTable& profits, const Split& split,
                             std::span<const double> grid, const EvalOptions& options);

/// `start` down to `stop` (inclusive) in `step` decrements, rounded to 1e-9.
std::vector<double> threshold_grid(double start, double stop, double step);

enum class ProfitObjective { guaranteed, relevance };

struct OptimalThreshold {
    double threshold = 0.0;
    double profit = 0.0;
};

/// Argmax over sweep points; ties go to the higher threshold. nullopt for a
/// sweep without grid points.
std::optional<OptimalThreshold> find_optimal_threshold(const SweepResult& sweep, ProfitObjective objective);

/// CSV: `threshold,avg_profit_guaranteed,avg_profit_relevance,precision_at_n,
/// accuracy_loss_pct,profit_gain_pct`, baseline row first (threshold `inf`),
/// six decimals.
void write_sweep_csv(const SweepResult& sweep, std::ostream& out);
void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path);

}  // namespace margin_bench
