#include "margin_bench/purchase.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "margin_bench/error.hpp"

namespace margin_bench {

void PurchaseModel::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::usage, "purchase", "lambda must be >= 0");
    if (!std::isfinite(r_max)) throw Error(ErrorKind::usage, "purchase", "r_max must be finite");
}

double purchase_probability(double predicted, const PurchaseModel& pm) {
    if (pm.kind == PurchaseKind::guaranteed) return 1.0;
    if (predicted > pm.r_max) {
        throw Error(ErrorKind::usage, "purchase",
                    "predicted rating " + std::to_string(predicted) + " exceeds r_max " + std::to_string(pm.r_max));
    }
    return std::exp(-pm.lambda * (pm.r_max - predicted));
}

double expected_profit(const RankedList& list, const ProfitTable& profits, const PurchaseModel& pm) {
    if (list.empty()) {
        if (pm.kind == PurchaseKind::guaranteed) {
            throw Error(ErrorKind::usage, "purchase", "guaranteed purchase needs a non-empty list");
        }
        return 0.0;
    }
    std::vector<double> terms;
    terms.reserve(list.size());
    for (const auto& entry : list.entries) {
        if (entry.item >= profits.size()) {
            throw Error(ErrorKind::data, "purchase", "no profit for item index " + std::to_string(entry.item));
        }
        terms.push_back(purchase_probability(entry.predicted, pm) * profits.profit[entry.item]);
    }
    // Summing in sorted order makes the result independent of list order.
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += t;
    return total / static_cast<double>(list.size());
}

}  // namespace margin_bench
