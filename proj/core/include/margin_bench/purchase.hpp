#pragma once

#include <string_view>

#include "margin_bench/factor.hpp"
#include "margin_bench/profitgen.hpp"

namespace margin_bench {

enum class PurchaseKind {
    guaranteed,       // the user buys exactly one list item
    relevance_decay,  // the user may walk away, more often for weaker items
};

struct PurchaseModel {
    PurchaseKind kind = PurchaseKind::relevance_decay;
    double lambda = 1.0;
    double r_max = kRatingCeiling;

    void validate() const;

    static PurchaseModel guaranteed() { return {PurchaseKind::guaranteed, 0.0, kRatingCeiling}; }
    static PurchaseModel relevance_decay(double lambda, double r_max = kRatingCeiling) {
        return {PurchaseKind::relevance_decay, lambda, r_max};
    }
};

/// exp(-lambda * (r_max - predicted)); 1 for the guaranteed model.
/// Throws Error(usage) if predicted exceeds r_max.
double purchase_probability(double predicted, const PurchaseModel& pm);

/// Expected profit from one user shown `list`. The user looks at one list
/// item picked uniformly and buys it with purchase_probability, so the value
/// is the list average of p * profit. An empty list yields 0 under
/// relevance decay and is an error under guaranteed purchase.
double expected_profit(const RankedList& list, const ProfitTable& profits, const PurchaseModel& pm);

}  // namespace margin_bench
