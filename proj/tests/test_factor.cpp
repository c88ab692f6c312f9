#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "margin_bench/error.hpp"
#include "margin_bench/factor.hpp"
#include "support/builders.hpp"

using namespace margin_bench;
using testing_support::Triple;
using testing_support::Universe;

namespace {

FactorModel random_toy_model(std::mt19937_64& rng, std::size_t users, std::size_t items, int k) {
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    FactorModel model(users, items, k, 3.0 + value(rng));
    for (double& v : model.user_bias()) v = value(rng);
    for (double& v : model.item_bias()) v = value(rng);
    for (std::size_t u = 0; u < users; ++u) {
        for (double& v : model.user_factors(static_cast<UserIndex>(u))) v = value(rng);
    }
    for (std::size_t i = 0; i < items; ++i) {
        for (double& v : model.item_factors(static_cast<ItemIndex>(i))) v = value(rng);
    }
    return model;
}

Interaction at(UserIndex u, ItemIndex i, double rating) {
    Interaction x;
    x.user = u;
    x.item = i;
    x.rating = rating;
    return x;
}

}  // namespace

TEST_CASE("predict") {
    FactorModel model(2, 3, 2, 3.58);
    SUBCASE("zero parameters give the global mean") { CHECK(model.predict(1, 2) == doctest::Approx(3.58)); }
    SUBCASE("clamped into [1, 5]") {
        model.user_bias()[0] = 2.72;  // raw 6.3
        CHECK(model.raw_score(0, 0) == doctest::Approx(6.3));
        CHECK(model.predict(0, 0) == 5.0);
        model.user_bias()[0] = -4.0;
        CHECK(model.predict(0, 0) == 1.0);
    }
    SUBCASE("matches a hand-computed dot product") {
        // mu 3.58 + b_u 0.1 + b_i -0.2 + (0.5*0.4 + -0.3*0.6) = 3.50
        model.user_bias()[1] = 0.1;
        model.item_bias()[2] = -0.2;
        auto p = model.user_factors(1);
        auto q = model.item_factors(2);
        p[0] = 0.5, p[1] = -0.3;
        q[0] = 0.4, q[1] = 0.6;
        CHECK(model.predict(1, 2) == doctest::Approx(3.50).epsilon(1e-12));
    }
    SUBCASE("out-of-range index") {
        CHECK_THROWS_AS(model.predict(2, 0), Error);
        CHECK_THROWS_AS(model.predict(0, 3), Error);
    }
}

TEST_CASE("train with zero epochs leaves a mean-only model") {
    const Universe uni({1, 2}, {10, 11});
    const auto data = uni.make({{1, 10, 4.0}, {2, 11, 2.0}, {1, 11, 3.0}});
    Hyperparams hp;
    hp.epochs = 0;
    const auto model = train(data, hp);
    for (UserIndex u = 0; u < 2; ++u) {
        for (ItemIndex i = 0; i < 2; ++i) CHECK(model.predict(u, i) == doctest::Approx(3.0));
    }
}

TEST_CASE("train rejects empty data and bad hyperparameters") {
    const Universe uni({1}, {10});
    CHECK_THROWS_AS(train(uni.make({}), Hyperparams{}), Error);
    Hyperparams hp;
    hp.k = 0;
    CHECK_THROWS_AS(train(uni.make({{1, 10, 3.0}}), hp), Error);
    hp = Hyperparams{};
    hp.learning_rate = 0.0;
    CHECK_THROWS_AS(train(uni.make({{1, 10, 3.0}}), hp), Error);
}

TEST_CASE("single interaction: training does not increase the loss") {
    const Universe uni({1}, {10});
    const auto data = uni.make({{1, 10, 5.0}});
    TrainingLog log;
    const auto model = train(data, Hyperparams{}, &log);
    CHECK(model.global_mean() == 5.0);
    REQUIRE(log.epoch_rmse.size() == 20);
    CHECK(log.epoch_rmse.back() <= log.initial_rmse);
}

TEST_CASE("rank-1 synthetic matrix is recovered") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> side(1.0, 2.2);
    std::vector<double> a(20), b(20);
    for (auto& v : a) v = side(rng);
    for (auto& v : b) v = side(rng);
    std::vector<long> ids(20);
    for (int j = 0; j < 20; ++j) ids[j] = j + 1;
    const Universe uni(ids, ids);
    std::vector<Triple> triples;
    for (int u = 0; u < 20; ++u) {
        for (int i = 0; i < 20; ++i) triples.emplace_back(u + 1, i + 1, std::clamp(a[u] * b[i], 1.0, 5.0));
    }
    const auto data = uni.make(triples);

    Hyperparams hp;
    hp.k = 2;
    hp.epochs = 300;
    hp.learning_rate = 0.02;
    hp.regularization = 0.0;
    const auto model = train(data, hp);
    CHECK(rmse(model, data) < 0.1);
}

TEST_CASE("training is deterministic and diverges loudly") {
    const Universe uni({1, 2, 3}, {10, 11, 12});
    const auto data = uni.make({{1, 10, 5.0}, {1, 11, 1.0}, {2, 10, 4.0}, {2, 12, 2.0}, {3, 11, 3.0}, {3, 12, 5.0}});
    Hyperparams hp;
    hp.k = 3;
    CHECK(train(data, hp) == train(data, hp));
    hp.seed = 43;
    CHECK_FALSE(train(data, hp) == train(data, Hyperparams{.k = 3}));

    Hyperparams wild;
    wild.learning_rate = 50.0;
    wild.epochs = 200;
    try {
        train(data, wild);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::numeric);
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
        CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
    }
}

TEST_CASE("gradient check") {
    std::mt19937_64 rng(17);
    SUBCASE("zero residual and no regularization is a stationary point") {
        FactorModel model(1, 1, 2, 4.0);
        const auto x = at(0, 0, 4.0);
        const auto g = local_gradient(model, x, 0.0);
        CHECK(g.user_bias == 0.0);
        CHECK(g.item_bias == 0.0);
        CHECK(gradient_check(model, x, 0.0, 1e-5) < 1e-8);
    }
    SUBCASE("random toy models agree with central differences") {
        for (int trial = 0; trial < 50; ++trial) {
            const auto model = random_toy_model(rng, 4, 5, 3);
            const auto x = at(static_cast<UserIndex>(trial % 4), static_cast<ItemIndex>(trial % 5), 1.0 + trial % 5);
            CHECK(gradient_check(model, x, 0.02, 1e-5) < 1e-4);
        }
    }
    SUBCASE("regularizer alone has gradient 2*lambda*theta") {
        const auto model = random_toy_model(rng, 2, 2, 4);
        const auto x = at(1, 0, 3.0);
        const double lambda = 0.3;
        const auto g = local_gradient(model, x, lambda, /*include_residual=*/false);
        CHECK(std::abs(g.user_bias - 2 * lambda * model.user_bias()[1]) < 1e-6);
        CHECK(std::abs(g.item_bias - 2 * lambda * model.item_bias()[0]) < 1e-6);
        for (int f = 0; f < 4; ++f) {
            CHECK(std::abs(g.user_factors[f] - 2 * lambda * model.user_factors(1)[f]) < 1e-6);
            CHECK(std::abs(g.item_factors[f] - 2 * lambda * model.item_factors(0)[f]) < 1e-6);
        }
        CHECK(gradient_check(model, x, lambda, 1e-5, false) < 1e-4);
    }
    SUBCASE("epsilon must be positive") {
        FactorModel model(1, 1, 1, 3.0);
        CHECK_THROWS_AS(gradient_check(model, at(0, 0, 3.0), 0.0, 0.0), Error);
    }
}

TEST_CASE("rank_candidates") {
    SUBCASE("user who rated everything gets an empty list") {
        const Universe uni({1}, {10, 11});
        const auto data = uni.make({{1, 10, 3.0}, {1, 11, 4.0}});
        FactorModel model(1, 2, 1, 3.5);
        CHECK(rank_candidates(model, 0, data).empty());
    }
    SUBCASE("equal predictions break toward the lower item index") {
        const Universe uni({1}, {10, 11, 12});
        const auto data = uni.make({{1, 11, 3.0}});
        FactorModel model(1, 3, 1, 3.5);
        const auto list = rank_candidates(model, 0, data);
        REQUIRE(list.size() == 2);
        CHECK(list.entries[0].item == 0);
        CHECK(list.entries[1].item == 2);
    }
    SUBCASE("ordering equals a sort of individual predictions") {
        std::mt19937_64 rng(23);
        const auto model = random_toy_model(rng, 2, 5, 2);
        const Universe uni({1, 2}, {10, 11, 12, 13, 14});
        const auto data = uni.make({{1, 12, 3.0}, {2, 10, 4.0}});
        const auto list = rank_candidates(model, 0, data);

        std::vector<std::pair<double, ItemIndex>> expected;
        for (ItemIndex i : {0u, 1u, 3u, 4u}) expected.emplace_back(model.predict(0, i), i);
        std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        REQUIRE(list.size() == expected.size());
        for (std::size_t j = 0; j < expected.size(); ++j) {
            CHECK(list.entries[j].item == expected[j].second);
            CHECK(list.entries[j].predicted == expected[j].first);
        }
    }
    SUBCASE("unknown user") {
        const Universe uni({1}, {10});
        FactorModel model(1, 1, 1, 3.0);
        CHECK_THROWS_AS(rank_candidates(model, 4, uni.make({})), Error);
    }
}

TEST_CASE("model dump round-trips bit-exactly") {
    std::mt19937_64 rng(29);
    const auto model = random_toy_model(rng, 7, 9, 3);
    std::stringstream buf;
    save_model(model, buf);
    CHECK(buf.str().substr(0, 4) == "MBFM");
    CHECK(load_model(buf) == model);

    std::stringstream bad("XXXX");
    CHECK_THROWS_AS(load_model(bad), Error);
    std::string truncated;
    {
        std::stringstream full;
        save_model(model, full);
        truncated = full.str().substr(0, 60);
    }
    std::stringstream cut(truncated);
    CHECK_THROWS_AS(load_model(cut), Error);
}
