#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "margin_bench/error.hpp"
#include "margin_bench/purchase.hpp"
#include "support/oracles.hpp"

using namespace margin_bench;

namespace {

RankedList list_of(std::initializer_list<RankedEntry> entries) {
    RankedList list;
    list.entries = entries;
    return list;
}

}  // namespace

TEST_CASE("purchase_probability") {
    const auto pm = PurchaseModel::relevance_decay(1.0);
    CHECK(purchase_probability(5.0, pm) == 1.0);
    CHECK(purchase_probability(4.0, pm) == doctest::Approx(0.367879).epsilon(1e-6));
    CHECK(purchase_probability(2.3, PurchaseModel::relevance_decay(0.0)) == 1.0);
    CHECK(purchase_probability(1.0, PurchaseModel::guaranteed()) == 1.0);
    CHECK_THROWS_AS(purchase_probability(5.5, pm), Error);
    CHECK(purchase_probability(3.0, pm) < purchase_probability(3.1, pm));
}

TEST_CASE("expected_profit examples") {
    ProfitTable profits{{1.0, 3.0, 2.0}};
    CHECK(expected_profit(list_of({{0, 4.0}, {1, 3.0}}), profits, PurchaseModel::guaranteed()) == 2.0);

    const auto single = list_of({{2, 4.0}});
    CHECK(expected_profit(single, profits, PurchaseModel::relevance_decay(1.0)) ==
          doctest::Approx(0.735759).epsilon(1e-6));

    const auto mixed = list_of({{0, 4.2}, {1, 3.1}, {2, 1.7}});
    CHECK(expected_profit(mixed, profits, PurchaseModel::relevance_decay(0.0)) ==
          expected_profit(mixed, profits, PurchaseModel::guaranteed()));
}

TEST_CASE("expected_profit edge cases") {
    ProfitTable profits{{1.0}};
    CHECK(expected_profit(RankedList{}, profits, PurchaseModel::relevance_decay(1.0)) == 0.0);
    CHECK_THROWS_AS(expected_profit(RankedList{}, profits, PurchaseModel::guaranteed()), Error);
    CHECK_THROWS_AS(expected_profit(list_of({{3, 4.0}}), profits, PurchaseModel::guaranteed()), Error);
}

TEST_CASE("expected_profit properties on random lists") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> lambda_dist(0.0, 3.0);
    for (int trial = 0; trial < 500; ++trial) {
        const auto profits = oracle::random_profits(rng, 30, trial % 2 == 0);
        auto list = oracle::random_candidates(rng, 1 + trial % 12, 30);
        const auto decay = PurchaseModel::relevance_decay(lambda_dist(rng));
        const double guaranteed = expected_profit(list, profits, PurchaseModel::guaranteed());
        const double relevance = expected_profit(list, profits, decay);
        const double top = profits.max_value();

        CHECK(guaranteed >= 0.0);
        CHECK(guaranteed <= top);
        CHECK(relevance >= 0.0);
        CHECK(relevance <= guaranteed);

        // Permutation invariance holds exactly.
        std::shuffle(list.entries.begin(), list.entries.end(), rng);
        CHECK(expected_profit(list, profits, PurchaseModel::guaranteed()) == guaranteed);
        CHECK(expected_profit(list, profits, decay) == relevance);

        // lambda -> 0 recovers guaranteed purchase.
        CHECK(std::abs(expected_profit(list, profits, PurchaseModel::relevance_decay(1e-9)) - guaranteed) <= 1e-6);
    }
}

TEST_CASE("invalid purchase models") {
    CHECK_THROWS_AS(PurchaseModel::relevance_decay(-1.0).validate(), Error);
    CHECK_NOTHROW(PurchaseModel::relevance_decay(0.0).validate());
}
