#include "margin_bench/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "margin_bench/error.hpp"

namespace margin_bench {

namespace {

double profit_of(const ProfitTable& profits, ItemIndex item) {
    if (item >= profits.size()) {
        throw Error(ErrorKind::data, "rerank", "no profit for item index " + std::to_string(item));
    }
    return profits.profit[item];
}

struct Scored {
    RankedEntry entry;
    double score;
};

// score desc, then predicted desc, then item asc.
bool score_order(const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return prediction_order(a.entry, b.entry);
}

std::vector<RankedEntry> top_by_score(std::vector<Scored>& scored, std::size_t count) {
    count = std::min(count, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(count), scored.end(), score_order);
    std::vector<RankedEntry> out;
    out.reserve(count);
    for (std::size_t j = 0; j < count; ++j) out.push_back(scored[j].entry);
    return out;
}

}  // namespace

void RerankConfig::validate() const {
    if (n < 1) throw Error(ErrorKind::usage, "rerank", "list length n must be >= 1");
    if (std::isnan(threshold)) throw Error(ErrorKind::usage, "rerank", "threshold is NaN");
}

Strategy parse_strategy(std::string_view name) {
    if (name == "baseline") return Strategy::baseline;
    if (name == "profit-rerank") return Strategy::profit_rerank;
    if (name == "expected-margin") return Strategy::expected_margin;
    throw Error(ErrorKind::usage, "rerank",
                "unknown strategy '" + std::string(name) + "' (expected baseline, profit-rerank or expected-margin)");
}

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
    case Strategy::baseline: return "baseline";
    case Strategy::profit_rerank: return "profit-rerank";
    case Strategy::expected_margin: return "expected-margin";
    }
    return "?";
}

RankedList topn_baseline(const RankedList& ranked, std::size_t n) {
    RankedList out;
    out.user = ranked.user;
    const auto count = static_cast<std::ptrdiff_t>(std::min(n, ranked.size()));
    out.entries.assign(ranked.entries.begin(), ranked.entries.begin() + count);
    return out;
}

std::size_t feasible_count(const RankedList& ranked, double threshold) {
    return static_cast<std::size_t>(std::count_if(ranked.entries.begin(), ranked.entries.end(),
                                                  [&](const RankedEntry& e) { return e.predicted >= threshold; }));
}

RankedList rerank_by_profit(const RankedList& ranked, const ProfitTable& profits, const RerankConfig& cfg) {
    cfg.validate();
    std::vector<Scored> feasible;
    for (const auto& entry : ranked.entries) {
        const double profit = profit_of(profits, entry.item);
        if (entry.predicted >= cfg.threshold) feasible.push_back({entry, profit});
    }

    RankedList out;
    out.user = ranked.user;
    out.entries = top_by_score(feasible, cfg.n);

    // Fewer feasible items than slots: every feasible item was taken, so the
    // fill comes from the infeasible remainder in prediction order.
    if (out.entries.size() < cfg.n) {
        for (const auto& entry : ranked.entries) {
            if (out.entries.size() >= cfg.n) break;
            if (!(entry.predicted >= cfg.threshold)) out.entries.push_back(entry);
        }
    }
    return out;
}

RankedList rank_by_expected_margin(const RankedList& ranked, const ProfitTable& profits, const PurchaseModel& pm,
                                   std::size_t n) {
    pm.validate();
    if (n < 1) throw Error(ErrorKind::usage, "rerank", "list length n must be >= 1");
    std::vector<Scored> scored;
    scored.reserve(ranked.size());
    for (const auto& entry : ranked.entries) {
        scored.push_back({entry, purchase_probability(entry.predicted, pm) * profit_of(profits, entry.item)});
    }
    RankedList out;
    out.user = ranked.user;
    out.entries = top_by_score(scored, n);
    return out;
}

}  // namespace margin_bench
