#include "margin_bench/factor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "margin_bench/error.hpp"
#include "margin_bench/random.hpp"

namespace margin_bench {

namespace {

[[noreturn]] void usage_error(const std::string& what) { throw Error(ErrorKind::usage, "factor", what); }

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t f = 0; f < a.size(); ++f) s += a[f] * b[f];
    return s;
}

double squared_norm(std::span<const double> a) noexcept { return dot(a, a); }

}  // namespace

void Hyperparams::validate() const {
    if (k < 1) usage_error("k must be >= 1");
    if (epochs < 0) usage_error("epochs must be >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) usage_error("learning_rate must be positive");
    if (!(regularization >= 0.0) || !std::isfinite(regularization)) {
        usage_error("regularization must be non-negative");
    }
    if (!(init_scale > 0.0) || !std::isfinite(init_scale)) usage_error("init_scale must be positive");
}

FactorModel::FactorModel(std::size_t n_users, std::size_t n_items, int k, double global_mean)
    : global_mean_(global_mean),
      k_(k),
      user_bias_(n_users, 0.0),
      item_bias_(n_items, 0.0),
      user_factors_(n_users * static_cast<std::size_t>(k), 0.0),
      item_factors_(n_items * static_cast<std::size_t>(k), 0.0) {
    if (k < 1) usage_error("k must be >= 1");
}

std::span<double> FactorModel::user_factors(UserIndex u) {
    return std::span<double>(user_factors_).subspan(std::size_t{u} * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_));
}
std::span<double> FactorModel::item_factors(ItemIndex i) {
    return std::span<double>(item_factors_).subspan(std::size_t{i} * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_));
}
std::span<const double> FactorModel::user_factors(UserIndex u) const {
    return std::span<const double>(user_factors_)
        .subspan(std::size_t{u} * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_));
}
std::span<const double> FactorModel::item_factors(ItemIndex i) const {
    return std::span<const double>(item_factors_)
        .subspan(std::size_t{i} * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_));
}

double FactorModel::raw_score(UserIndex u, ItemIndex i) const noexcept {
    return global_mean_ + user_bias_[u] + item_bias_[i] + dot(user_factors(u), item_factors(i));
}

double FactorModel::predict(UserIndex u, ItemIndex i) const {
    if (u >= n_users() || i >= n_items()) {
        usage_error("predict: index out of range (user " + std::to_string(u) + ", item " + std::to_string(i) + ")");
    }
    return std::clamp(raw_score(u, i), kRatingFloor, kRatingCeiling);
}

bool FactorModel::all_finite() const {
    const auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return std::isfinite(global_mean_) && finite(user_bias_) && finite(item_bias_) && finite(user_factors_) &&
           finite(item_factors_);
}

double rmse(const FactorModel& model, const InteractionSet& data) {
    if (data.empty()) return 0.0;
    double sse = 0.0;
    for (const auto& x : data.interactions()) {
        const double e = x.rating - model.predict(x.user, x.item);
        sse += e * e;
    }
    return std::sqrt(sse / static_cast<double>(data.size()));
}

FactorModel train(const InteractionSet& data, const Hyperparams& hp, TrainingLog* log) {
    hp.validate();
    if (data.empty()) throw Error(ErrorKind::data, "factor", "training set is empty");

    FactorModel model(data.n_users(), data.n_items(), hp.k, data.mean_rating());
    if (hp.epochs == 0) {
        if (log) log->initial_rmse = rmse(model, data);
        return model;
    }

    random::Engine rng(hp.seed);
    for (std::size_t u = 0; u < model.n_users(); ++u) {
        for (double& v : model.user_factors(static_cast<UserIndex>(u))) v = random::uniform(rng, -hp.init_scale, hp.init_scale);
    }
    for (std::size_t i = 0; i < model.n_items(); ++i) {
        for (double& v : model.item_factors(static_cast<ItemIndex>(i))) v = random::uniform(rng, -hp.init_scale, hp.init_scale);
    }
    if (log) {
        log->initial_rmse = rmse(model, data);
        log->epoch_rmse.clear();
    }

    const auto& xs = data.interactions();
    std::vector<std::size_t> order(xs.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;

    const double lr = hp.learning_rate;
    const double reg = hp.regularization;
    auto& user_bias = model.user_bias();
    auto& item_bias = model.item_bias();

    for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
        random::shuffle(std::span<std::size_t>(order), rng);
        double sse = 0.0;
        for (const std::size_t j : order) {
            const auto& x = xs[j];
            const double err = x.rating - model.raw_score(x.user, x.item);
            sse += err * err;
            // Step of lr/2 along the negative gradient of the local objective.
            user_bias[x.user] += lr * (err - reg * user_bias[x.user]);
            item_bias[x.item] += lr * (err - reg * item_bias[x.item]);
            auto p = model.user_factors(x.user);
            auto q = model.item_factors(x.item);
            for (std::size_t f = 0; f < p.size(); ++f) {
                const double pf = p[f];
                p[f] += lr * (err * q[f] - reg * pf);
                q[f] += lr * (err * pf - reg * q[f]);
            }
        }
        if (!std::isfinite(sse) || !model.all_finite()) {
            throw Error(ErrorKind::numeric, "factor",
                        "training diverged at epoch " + std::to_string(epoch) +
                            " (non-finite loss); try a smaller learning_rate");
        }
        if (log) log->epoch_rmse.push_back(rmse(model, data));
    }
    return model;
}

double local_objective(const FactorModel& model, const Interaction& x, double regularization, bool include_residual) {
    const auto p = model.user_factors(x.user);
    const auto q = model.item_factors(x.item);
    const double bu = model.user_bias()[x.user];
    const double bi = model.item_bias()[x.item];
    double value = regularization * (bu * bu + bi * bi + squared_norm(p) + squared_norm(q));
    if (include_residual) {
        const double err = x.rating - model.raw_score(x.user, x.item);
        value += err * err;
    }
    return value;
}

LocalGradient local_gradient(const FactorModel& model, const Interaction& x, double regularization,
                             bool include_residual) {
    const auto p = model.user_factors(x.user);
    const auto q = model.item_factors(x.item);
    const double err = include_residual ? x.rating - model.raw_score(x.user, x.item) : 0.0;
    LocalGradient g;
    g.user_bias = -2.0 * err + 2.0 * regularization * model.user_bias()[x.user];
    g.item_bias = -2.0 * err + 2.0 * regularization * model.item_bias()[x.item];
    g.user_factors.resize(p.size());
    g.item_factors.resize(q.size());
    for (std::size_t f = 0; f < p.size(); ++f) {
        g.user_factors[f] = -2.0 * err * q[f] + 2.0 * regularization * p[f];
        g.item_factors[f] = -2.0 * err * p[f] + 2.0 * regularization * q[f];
    }
    return g;
}

double gradient_check(const FactorModel& model, const Interaction& x, double regularization, double epsilon,
                      bool include_residual) {
    if (!(epsilon > 0.0)) usage_error("gradient_check: epsilon must be positive");
    if (x.user >= model.n_users() || x.item >= model.n_items()) usage_error("gradient_check: index out of range");

    const LocalGradient analytic = local_gradient(model, x, regularization, include_residual);
    FactorModel probe = model;
    double worst = 0.0;

    const auto compare = [&](double& param, double expected) {
        const double saved = param;
        param = saved + epsilon;
        const double up = local_objective(probe, x, regularization, include_residual);
        param = saved - epsilon;
        const double down = local_objective(probe, x, regularization, include_residual);
        param = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        if (expected == 0.0 && numeric == 0.0) return;
        const double scale = std::max({std::abs(expected), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(expected - numeric) / scale);
    };

    compare(probe.user_bias()[x.user], analytic.user_bias);
    compare(probe.item_bias()[x.item], analytic.item_bias);
    auto p = probe.user_factors(x.user);
    auto q = probe.item_factors(x.item);
    for (std::size_t f = 0; f < p.size(); ++f) compare(p[f], analytic.user_factors[f]);
    for (std::size_t f = 0; f < q.size(); ++f) compare(q[f], analytic.item_factors[f]);
    return worst;
}

RankedList rank_candidates(const FactorModel& model, UserIndex user, const UserItems& rated) {
    if (user >= model.n_users()) usage_error("rank_candidates: unknown user index " + std::to_string(user));
    const auto seen = rated.items_of(user);
    RankedList list;
    list.user = user;
    list.entries.reserve(model.n_items() - std::min(model.n_items(), seen.size()));
    auto next_seen = seen.begin();
    for (ItemIndex i = 0; i < model.n_items(); ++i) {
        if (next_seen != seen.end() && *next_seen == i) {
            ++next_seen;
            continue;
        }
        list.entries.push_back({i, std::clamp(model.raw_score(user, i), kRatingFloor, kRatingCeiling)});
    }
    std::sort(list.entries.begin(), list.entries.end(), prediction_order);
    return list;
}

RankedList rank_candidates(const FactorModel& model, UserIndex user, const InteractionSet& train) {
    return rank_candidates(model, user, UserItems(train));
}

namespace {

constexpr char kMagic[4] = {'M', 'B', 'F', 'M'};
constexpr std::uint32_t kModelVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((v >> (8 * b)) & 0xffu);
    out.write(bytes, 8);
}
void put_u32(std::ostream& out, std::uint32_t v) {
    char bytes[4];
    for (int b = 0; b < 4; ++b) bytes[b] = static_cast<char>((v >> (8 * b)) & 0xffu);
    out.write(bytes, 4);
}
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw Error(ErrorKind::data, "factor", "truncated model file");
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= std::uint64_t{bytes[b]} << (8 * b);
    return v;
}
std::uint32_t get_u32(std::istream& in) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw Error(ErrorKind::data, "factor", "truncated model file");
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= std::uint32_t{bytes[b]} << (8 * b);
    return v;
}
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void save_model(const FactorModel& model, std::ostream& out) {
    out.write(kMagic, 4);
    put_u32(out, kModelVersion);
    put_u64(out, model.n_users());
    put_u64(out, model.n_items());
    put_u32(out, static_cast<std::uint32_t>(model.k()));
    put_f64(out, model.global_mean());
    put_f64(out, kRatingFloor);
    put_f64(out, kRatingCeiling);
    for (double v : model.user_bias()) put_f64(out, v);
    for (double v : model.item_bias()) put_f64(out, v);
    for (double v : model.user_factor_data()) put_f64(out, v);
    for (double v : model.item_factor_data()) put_f64(out, v);
    if (!out) throw Error(ErrorKind::data, "factor", "failed to write model");
}

FactorModel load_model(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
        throw Error(ErrorKind::data, "factor", "not a model file (bad magic)");
    }
    if (const auto version = get_u32(in); version != kModelVersion) {
        throw Error(ErrorKind::data, "factor", "unsupported model version " + std::to_string(version));
    }
    const auto n_users = get_u64(in);
    const auto n_items = get_u64(in);
    const auto k = get_u32(in);
    if (k < 1 || k > (1u << 20)) throw Error(ErrorKind::data, "factor", "corrupt factor count");
    FactorModel model(n_users, n_items, static_cast<int>(k), get_f64(in));
    const double lo = get_f64(in);
    const double hi = get_f64(in);
    if (lo != kRatingFloor || hi != kRatingCeiling) throw Error(ErrorKind::data, "factor", "unexpected clamp range");
    for (double& v : model.user_bias()) v = get_f64(in);
    for (double& v : model.item_bias()) v = get_f64(in);
    for (std::size_t u = 0; u < n_users; ++u) {
        for (double& v : model.user_factors(static_cast<UserIndex>(u))) v = get_f64(in);
    }
    for (std::size_t i = 0; i < n_items; ++i) {
        for (double& v : model.item_factors(static_cast<ItemIndex>(i))) v = get_f64(in);
    }
    return model;
}

void save_model(const FactorModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::data, "factor", "cannot write '" + path.string() + "'");
    save_model(model, out);
}

FactorModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::data, "factor", "cannot open '" + path.string() + "'");
    return load_model(in);
}

}  // namespace margin_bench
