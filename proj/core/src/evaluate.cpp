#include "margin_bench/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <thread>

#include "margin_bench/error.hpp"

namespace margin_bench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void usage_error(const std::string& what) { throw Error(ErrorKind::usage, "evaluate", what); }

InteractionSet relevant_subset(const InteractionSet& test, double min_rating) {
    std::vector<Interaction> kept;
    for (const auto& x : test.interactions()) {
        if (x.rating >= min_rating) kept.push_back(x);
    }
    return InteractionSet(std::move(kept), test.user_index_ptr(), test.item_index_ptr());
}

struct UserRow {
    double profit_guaranteed = 0.0;
    double profit_relevance = 0.0;
    double precision = std::numeric_limits<double>::quiet_NaN();  // NaN: excluded
    bool below_n_feasible = false;
    bool has_list = false;
};

double relative_pct(double delta, double base) {
    if (base == 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double pct = 100.0 * delta / base;
    return pct == 0.0 ? 0.0 : pct;  // no "-0.000000" in the CSV
}

unsigned resolve_threads(unsigned requested, std::size_t work) {
    unsigned threads = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    return static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(work, 1)));
}

}  // namespace

std::optional<double> precision_at_n(const RankedList& list, std::span<const ItemIndex> relevant, std::size_t n) {
    if (relevant.empty()) return std::nullopt;
    if (n == 0) usage_error("precision_at_n: n must be >= 1");
    const std::size_t shown = std::min(n, list.size());
    std::size_t hits = 0;
    for (std::size_t j = 0; j < shown; ++j) {
        if (std::binary_search(relevant.begin(), relevant.end(), list.entries[j].item)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

Evaluator::Evaluator(const FactorModel& model, const ProfitTable& profits, const Split& split, EvalOptions options)
    : model_(model),
      profits_(profits),
      options_(options),
      train_items_(split.train),
      relevant_items_(relevant_subset(split.test, options.relevant_rating)) {
    if (options_.n < 1) usage_error("list length n must be >= 1");
    options_.relevance.validate();
    if (!(split.train.users() == split.test.users()) || !(split.train.items() == split.test.items())) {
        usage_error("train and test partitions use different index maps");
    }
    if (model.n_users() != split.train.n_users() || model.n_items() != split.train.n_items()) {
        usage_error("model dimensions do not match the data's index maps");
    }
    if (profits.size() != model.n_items()) usage_error("profit table size does not match item count");

    std::vector<char> has_test(split.test.n_users(), 0);
    for (const auto& x : split.test.interactions()) has_test[x.user] = 1;
    for (std::size_t u = 0; u < has_test.size(); ++u) {
        if (has_test[u]) users_.push_back(static_cast<UserIndex>(u));
    }
}

RankedList Evaluator::candidates(UserIndex user) const { return rank_candidates(model_, user, train_items_); }

namespace {

RankedList apply_setting(const RankedList& ranked, const ProfitTable& profits, const EvalOptions& options,
                         const Setting& setting) {
    switch (setting.strategy) {
    case Strategy::baseline: return topn_baseline(ranked, options.n);
    case Strategy::profit_rerank: return rerank_by_profit(ranked, profits, {setting.threshold, options.n});
    case Strategy::expected_margin: return rank_by_expected_margin(ranked, profits, options.relevance, options.n);
    }
    return {};
}

}  // namespace

RankedList Evaluator::recommend(UserIndex user, Setting setting) const {
    return apply_setting(candidates(user), profits_, options_, setting);
}

std::vector<EvalPoint> Evaluator::evaluate(std::span<const Setting> settings) const {
    // Slot 0 is always the baseline so percentages can be derived.
    std::vector<Setting> all;
    all.reserve(settings.size() + 1);
    all.push_back({Strategy::baseline, kInf});
    all.insert(all.end(), settings.begin(), settings.end());

    const std::size_t n_settings = all.size();
    std::vector<UserRow> rows(users_.size() * n_settings);

    const auto evaluate_range = [&](std::size_t begin, std::size_t end) {
        const PurchaseModel guaranteed = PurchaseModel::guaranteed();
        for (std::size_t j = begin; j < end; ++j) {
            const UserIndex user = users_[j];
            const RankedList ranked = candidates(user);
            if (ranked.empty()) continue;
            const auto relevant = relevant_items_.items_of(user);
            for (std::size_t s = 0; s < n_settings; ++s) {
                const RankedList list = apply_setting(ranked, profits_, options_, all[s]);
                UserRow& row = rows[j * n_settings + s];
                row.has_list = true;
                row.profit_guaranteed = expected_profit(list, profits_, guaranteed);
                row.profit_relevance = expected_profit(list, profits_, options_.relevance);
                if (auto p = precision_at_n(list, relevant, options_.n)) row.precision = *p;
                if (all[s].strategy == Strategy::profit_rerank) {
                    row.below_n_feasible = feasible_count(ranked, all[s].threshold) < options_.n;
                }
            }
        }
    };

    const unsigned threads = resolve_threads(options_.threads, users_.size());
    if (threads <= 1) {
        evaluate_range(0, users_.size());
    } else {
        std::vector<std::jthread> workers;
        const std::size_t chunk = (users_.size() + threads - 1) / threads;
        std::vector<std::exception_ptr> failures(threads);
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(users_.size(), t * chunk);
            const std::size_t end = std::min(users_.size(), begin + chunk);
            workers.emplace_back([&, t, begin, end] {
                try {
                    evaluate_range(begin, end);
                } catch (...) {
                    failures[t] = std::current_exception();
                }
            });
        }
        workers.clear();
        for (const auto& failure : failures) {
            if (failure) std::rethrow_exception(failure);
        }
    }

    // Aggregate sequentially in user order; the result is independent of the
    // thread count.
    std::vector<EvalPoint> points(n_settings);
    for (std::size_t s = 0; s < n_settings; ++s) {
        double sum_g = 0.0, sum_r = 0.0;
        std::size_t profit_users = 0, precision_users = 0, short_users = 0, hits = 0;
        for (std::size_t j = 0; j < users_.size(); ++j) {
            const UserRow& row = rows[j * n_settings + s];
            if (!row.has_list) continue;
            ++profit_users;
            sum_g += row.profit_guaranteed;
            sum_r += row.profit_relevance;
            if (!std::isnan(row.precision)) {
                ++precision_users;
                hits += static_cast<std::size_t>(std::llround(row.precision * static_cast<double>(options_.n)));
            }
            if (row.below_n_feasible) ++short_users;
        }
        EvalPoint& point = points[s];
        point.threshold = all[s].strategy == Strategy::profit_rerank   ? all[s].threshold
                          : all[s].strategy == Strategy::expected_margin ? -kInf
                                                                          : kInf;
        point.avg_profit_guaranteed = profit_users ? sum_g / static_cast<double>(profit_users) : 0.0;
        point.avg_profit_relevance = profit_users ? sum_r / static_cast<double>(profit_users) : 0.0;
        point.precision_at_n =
            precision_users ? static_cast<double>(hits) / static_cast<double>(precision_users * options_.n) : 0.0;
        point.users_below_n_feasible = short_users;
    }
    const EvalPoint base = points.front();
    for (auto& point : points) {
        point.accuracy_loss_pct = relative_pct(base.precision_at_n - point.precision_at_n, base.precision_at_n);
        point.profit_gain_pct =
            relative_pct(point.avg_profit_guaranteed - base.avg_profit_guaranteed, base.avg_profit_guaranteed);
    }
    points.erase(points.begin());
    return points;
}

EvalPoint Evaluator::evaluate(Setting setting) const {
    return evaluate(std::span<const Setting>(&setting, 1)).front();
}

EvalPoint evaluate_config(const FactorModel& model, const ProfitTable& profits, const Split& split, Setting setting,
                          const EvalOptions& options) {
    return Evaluator(model, profits, split, options).evaluate(setting);
}

SweepResult sweep_thresholds(const Evaluator& evaluator, Strategy strategy, std::span<const double> grid) {
    std::vector<Setting> settings;
    settings.push_back({Strategy::baseline, kInf});
    if (strategy == Strategy::profit_rerank) {
        if (grid.empty()) usage_error("threshold grid is empty");
        std::vector<double> sorted(grid.begin(), grid.end());
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        for (std::size_t j = 0; j < sorted.size(); ++j) {
            if (std::isnan(sorted[j])) usage_error("threshold grid contains NaN");
            if (j > 0 && sorted[j] == sorted[j - 1]) usage_error("threshold grid contains duplicates");
            settings.push_back({Strategy::profit_rerank, sorted[j]});
        }
    } else if (strategy == Strategy::expected_margin) {
        settings.push_back({Strategy::expected_margin, -kInf});
    }

    auto points = evaluator.evaluate(settings);
    SweepResult result;
    result.strategy = strategy;
    result.baseline = points.front();
    result.points.assign(points.begin() + 1, points.end());
    return result;
}

SweepResult sweep_thresholds(const FactorModel& model, const ProfitTable& profits, const Split& split,
                             std::span<const double> grid, const EvalOptions& options) {
    return sweep_thresholds(Evaluator(model, profits, split, options), Strategy::profit_rerank, grid);
}

std::vector<double> threshold_grid(double start, double stop, double step) {
    if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(stop) || start < stop) {
        usage_error("threshold grid needs start >= stop and step > 0");
    }
    const auto count = static_cast<std::size_t>(std::floor((start - stop) / step + 1e-9)) + 1;
    std::vector<double> grid;
    grid.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        grid.push_back(std::round((start - static_cast<double>(j) * step) * 1e9) / 1e9);
    }
    return grid;
}

std::optional<OptimalThreshold> find_optimal_threshold(const SweepResult& sweep, ProfitObjective objective) {
    std::optional<OptimalThreshold> best;
    for (const auto& point : sweep.points) {
        const double profit =
            objective == ProfitObjective::guaranteed ? point.avg_profit_guaranteed : point.avg_profit_relevance;
        const bool better = !best || profit > best->profit ||
                            (profit == best->profit && point.threshold > best->threshold);
        if (better) best = OptimalThreshold{point.threshold, profit};
    }
    return best;
}

void write_sweep_csv(const SweepResult& sweep, std::ostream& out) {
    out << "threshold,avg_profit_guaranteed,avg_profit_relevance,precision_at_n,accuracy_loss_pct,profit_gain_pct\n";
    // Values that round to zero print as "0.000000", never "-0.000000".
    const auto tidy = [](double v) { return std::abs(v) < 5e-7 ? 0.0 : v; };
    const auto row = [&](const EvalPoint& p) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", tidy(p.threshold),
                      tidy(p.avg_profit_guaranteed), tidy(p.avg_profit_relevance), tidy(p.precision_at_n),
                      tidy(p.accuracy_loss_pct), tidy(p.profit_gain_pct));
        out << buf;
    };
    row(sweep.baseline);
    for (const auto& p : sweep.points) row(p);
}

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::data, "evaluate", "cannot write '" + path.string() + "'");
    write_sweep_csv(sweep, out);
}

}  // namespace margin_bench
