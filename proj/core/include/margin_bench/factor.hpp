#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "margin_bench/dataio.hpp"

namespace margin_bench {

struct Hyperparams {
    int k = 32;
    int epochs = 20;
    double learning_rate = 0.005;
    double regularization = 0.02;
    double init_scale = 0.1;
    std::uint64_t seed = 42;

    /// Throws Error(usage) when a field is out of its domain.
    void validate() const;
};

inline constexpr double kRatingFloor = 1.0;
inline constexpr double kRatingCeiling = 5.0;

/// Biased matrix factorization:
///   r_hat(u, i) = clamp(mu + b_u + b_i + p_u . q_i, [1, 5])
/// Factor matrices are stored row-major (one row of k values per user/item).
class FactorModel {
public:
    FactorModel() = default;
    FactorModel(std::size_t n_users, std::size_t n_items, int k, double global_mean);

    std::size_t n_users() const noexcept { return user_bias_.size(); }
    std::size_t n_items() const noexcept { return item_bias_.size(); }
    int k() const noexcept { return k_; }

    double global_mean() const noexcept { return global_mean_; }
    double& global_mean() noexcept { return global_mean_; }
    std::vector<double>& user_bias() noexcept { return user_bias_; }
    std::vector<double>& item_bias() noexcept { return item_bias_; }
    const std::vector<double>& user_bias() const noexcept { return user_bias_; }
    const std::vector<double>& item_bias() const noexcept { return item_bias_; }

    std::span<double> user_factors(UserIndex u);
    std::span<double> item_factors(ItemIndex i);
    std::span<const double> user_factors(UserIndex u) const;
    std::span<const double> item_factors(ItemIndex i) const;

    const std::vector<double>& user_factor_data() const noexcept { return user_factors_; }
    const std::vector<double>& item_factor_data() const noexcept { return item_factors_; }

    /// Unclamped mu + b_u + b_i + p_u . q_i; no range checks.
    double raw_score(UserIndex u, ItemIndex i) const noexcept;

    /// Clamped prediction. Throws Error(usage) on out-of-range indices.
    double predict(UserIndex u, ItemIndex i) const;

    bool all_finite() const;

    friend bool operator==(const FactorModel&, const FactorModel&) = default;

private:
    double global_mean_ = 0.0;
    int k_ = 1;
    std::vector<double> user_bias_;
    std::vector<double> item_bias_;
    std::vector<double> user_factors_;
    std::vector<double> item_factors_;
};

/// Per-epoch training statistics (mean squared error on the training set
/// measured after the epoch).
struct TrainingLog {
    double initial_rmse = 0.0;
    std::vector<double> epoch_rmse;
};

/// SGD on sum over (u,i) of (r - s)^2 + reg * (b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2).
/// mu is fixed to the training mean. Deterministic given (train, hp).
FactorModel train(const InteractionSet& train, const Hyperparams& hp, TrainingLog* log = nullptr);

/// Root mean squared error of clamped predictions over `data`.
double rmse(const FactorModel& model, const InteractionSet& data);

/// Analytic gradient of the per-interaction objective (unclamped score).
struct LocalGradient {
    double user_bias = 0.0;
    double item_bias = 0.0;
    std::vector<double> user_factors;
    std::vector<double> item_factors;
};

/// `include_residual = false` drops the squared-error term, leaving only the
/// regularizer.
double local_objective(const FactorModel& model, const Interaction& x, double regularization,
                       bool include_residual = true);
LocalGradient local_gradient(const FactorModel& model, const Interaction& x, double regularization,
                             bool include_residual = true);

/// Max relative deviation between the analytic gradient and central finite
/// differences over every parameter the interaction touches. Each deviation is
/// |a - n| / max(|a|, |n|, 1e-6), and 0 when both are exactly 0.
double gradient_check(const FactorModel& model, const Interaction& x, double regularization, double epsilon,
                      bool include_residual = true);

struct RankedEntry {
    ItemIndex item = 0;
    double predicted = 0.0;

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RankedList {
    UserIndex user = 0;
    std::vector<RankedEntry> entries;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }

    friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// Total order used for every prediction ranking: predicted desc, item asc.
inline bool prediction_order(const RankedEntry& a, const RankedEntry& b) {
    if (a.predicted != b.predicted) return a.predicted > b.predicted;
    return a.item < b.item;
}

/// Every item the user has not rated in `rated`, in prediction order.
RankedList rank_candidates(const FactorModel& model, UserIndex user, const UserItems& rated);
RankedList rank_candidates(const FactorModel& model, UserIndex user, const InteractionSet& train);

/// Binary model dump (little-endian):
///   "MBFM" | u32 version=1 | u64 n_users | u64 n_items | u32 k | f64 mu |
///   f64 clamp_lo | f64 clamp_hi | f64 user_bias[n_users] | f64 item_bias[n_items] |
///   f64 user_factors[n_users*k] | f64 item_factors[n_items*k]
void save_model(const FactorModel& model, std::ostream& out);
FactorModel load_model(std::istream& in);
void save_model(const FactorModel& model, const std::filesystem::path& path);
FactorModel load_model(const std::filesystem::path& path);

}  // namespace margin_bench
