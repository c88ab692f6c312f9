#pragma once

#include <cstddef>
#include <limits>
#include <string_view>

#include "margin_bench/factor.hpp"
#include "margin_bench/profitgen.hpp"
#include "margin_bench/purchase.hpp"

namespace margin_bench {

struct RerankConfig {
    /// Minimum predicted rating for profit-based selection. -inf disables the
    /// constraint; anything above 5 degenerates to the baseline list.
    double threshold = -std::numeric_limits<double>::infinity();
    std::size_t n = 10;

    void validate() const;
};

enum class Strategy { baseline, profit_rerank, expected_margin };

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy strategy);

/// First min(n, |ranked|) entries.
RankedList topn_baseline(const RankedList& ranked, std::size_t n);

/// Number of candidates with predicted rating >= threshold.
std::size_t feasible_count(const RankedList& ranked, double threshold);

/// Threshold-constrained greedy profit selection.
///
/// Among candidates predicted at or above the threshold, the min(n, |F|) most
/// profitable are taken (ties: higher prediction, then lower item index) and
/// listed by profit. Remaining slots are filled with the best-predicted
/// leftovers regardless of the threshold, listed by prediction.
RankedList rerank_by_profit(const RankedList& ranked, const ProfitTable& profits, const RerankConfig& cfg);

/// Top-n by purchase_probability * profit (ties: prediction desc, item asc).
RankedList rank_by_expected_margin(const RankedList& ranked, const ProfitTable& profits, const PurchaseModel& pm,
                                   std::size_t n);

}  // namespace margin_bench
