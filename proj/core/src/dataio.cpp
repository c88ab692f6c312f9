#include "margin_bench/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <unordered_set>

#include "margin_bench/error.hpp"
#include "margin_bench/random.hpp"

namespace margin_bench {

namespace {

constexpr double kMinRating = 1.0;
constexpr double kMaxRating = 5.0;

[[noreturn]] void data_error(const std::string& what) { throw Error(ErrorKind::data, "dataio", what); }

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
    data_error("line " + std::to_string(line_no) + ": " + what);
}

std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + sep.size();
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
    field = trim(field);
    if (field.empty()) return false;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace

std::uint32_t IdIndex::intern(std::int64_t raw_id) {
    const auto next = static_cast<std::uint32_t>(raw_ids_.size());
    const auto [it, inserted] = to_index_.try_emplace(raw_id, next);
    if (inserted) raw_ids_.push_back(raw_id);
    return it->second;
}

std::optional<std::uint32_t> IdIndex::find(std::int64_t raw_id) const {
    const auto it = to_index_.find(raw_id);
    if (it == to_index_.end()) return std::nullopt;
    return it->second;
}

InteractionSet::InteractionSet()
    : users_(std::make_shared<const IdIndex>()), items_(std::make_shared<const IdIndex>()) {}

InteractionSet::InteractionSet(std::vector<Interaction> interactions, std::shared_ptr<const IdIndex> users,
                               std::shared_ptr<const IdIndex> items)
    : interactions_(std::move(interactions)), users_(std::move(users)), items_(std::move(items)) {}

double InteractionSet::mean_rating() const {
    if (interactions_.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& x : interactions_) sum += x.rating;
    return sum / static_cast<double>(interactions_.size());
}

RatingFormat parse_rating_format(std::string_view name) {
    if (name == "movielens-1m") return RatingFormat::movielens_1m;
    if (name == "movielens-100k") return RatingFormat::movielens_100k;
    if (name == "csv") return RatingFormat::csv;
    throw Error(ErrorKind::usage, "dataio",
                "unknown rating format '" + std::string(name) + "' (expected movielens-1m, movielens-100k or csv)");
}

std::string_view to_string(RatingFormat format) {
    switch (format) {
    case RatingFormat::movielens_1m: return "movielens-1m";
    case RatingFormat::movielens_100k: return "movielens-100k";
    case RatingFormat::csv: return "csv";
    }
    return "?";
}

InteractionSet read_ratings(std::istream& in, RatingFormat format) {
    const std::string_view sep = format == RatingFormat::movielens_1m    ? "::"
                                 : format == RatingFormat::movielens_100k ? "\t"
                                                                          : ",";
    auto users = std::make_shared<IdIndex>();
    auto items = std::make_shared<IdIndex>();
    std::vector<Interaction> interactions;
    std::unordered_set<std::uint64_t> seen;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        if (format == RatingFormat::csv && line_no == 1 && view.starts_with("user")) continue;

        const auto fields = split_fields(view, sep);
        if (fields.size() < 3 || fields.size() > 4) {
            line_error(line_no, "expected 3 or 4 fields, got " + std::to_string(fields.size()));
        }
        Interaction x;
        if (!parse_number(fields[0], x.user_id) || !parse_number(fields[1], x.item_id)) {
            line_error(line_no, "user and item ids must be integers");
        }
        if (x.user_id <= 0 || x.item_id <= 0) line_error(line_no, "ids must be strictly positive");
        if (!parse_number(fields[2], x.rating) || !std::isfinite(x.rating)) {
            line_error(line_no, "rating is not a number");
        }
        if (x.rating < kMinRating || x.rating > kMaxRating) line_error(line_no, "rating out of range [1, 5]");
        if (fields.size() == 4) {
            std::int64_t ts = 0;
            if (!parse_number(fields[3], ts)) {
                // ML-100K dumps sometimes carry float timestamps ("881250949.0").
                double ts_real = 0.0;
                if (!parse_number(fields[3], ts_real) || !std::isfinite(ts_real)) {
                    line_error(line_no, "timestamp is not a number");
                }
                ts = static_cast<std::int64_t>(ts_real);
            }
            x.timestamp = ts;
        }
        x.user = users->intern(x.user_id);
        x.item = items->intern(x.item_id);
        const std::uint64_t key = (std::uint64_t{x.user} << 32) | x.item;
        if (!seen.insert(key).second) {
            line_error(line_no, "duplicate rating for user " + std::to_string(x.user_id) + ", item " +
                                    std::to_string(x.item_id));
        }
        interactions.push_back(x);
    }
    if (in.bad()) data_error("read failure");
    return InteractionSet(std::move(interactions), std::move(users), std::move(items));
}

InteractionSet load_ratings(const std::filesystem::path& path, RatingFormat format) {
    std::ifstream in(path);
    if (!in) data_error("cannot open ratings file '" + path.string() + "'");
    try {
        return read_ratings(in, format);
    } catch (const Error& e) {
        // Prepend the path; the message already starts with "dataio: ".
        const std::string msg = e.what();
        throw Error(e.kind(), "dataio", path.string() + ": " + msg.substr(msg.find(": ") + 2));
    }
}

Split split_holdout(const InteractionSet& data, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
        throw Error(ErrorKind::usage, "dataio", "test_fraction must lie in [0, 1]");
    }
    const auto& all = data.interactions();

    std::vector<std::vector<std::size_t>> by_user(data.n_users());
    for (std::size_t pos = 0; pos < all.size(); ++pos) by_user[all[pos].user].push_back(pos);

    random::Engine rng(seed);
    std::vector<char> in_test(all.size(), 0);
    for (auto& positions : by_user) {
        const std::size_t count = positions.size();
        if (count < 2) continue;
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(count)));
        if (n_test == 0) continue;
        random::shuffle(std::span<std::size_t>(positions), rng);
        for (std::size_t j = 0; j < n_test; ++j) in_test[positions[j]] = 1;
    }

    std::vector<Interaction> train;
    std::vector<Interaction> test;
    for (std::size_t pos = 0; pos < all.size(); ++pos) (in_test[pos] ? test : train).push_back(all[pos]);

    Split split;
    split.train = InteractionSet(std::move(train), data.user_index_ptr(), data.item_index_ptr());
    split.test = InteractionSet(std::move(test), data.user_index_ptr(), data.item_index_ptr());
    split.seed = seed;
    split.test_fraction = test_fraction;
    return split;
}

UserItems::UserItems(const InteractionSet& data) : offsets_(data.n_users() + 1, 0) {
    for (const auto& x : data.interactions()) ++offsets_[x.user + 1];
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    items_.resize(data.size());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& x : data.interactions()) items_[cursor[x.user]++] = x.item;
    for (std::size_t u = 0; u + 1 < offsets_.size(); ++u) {
        std::sort(items_.begin() + static_cast<std::ptrdiff_t>(offsets_[u]),
                  items_.begin() + static_cast<std::ptrdiff_t>(offsets_[u + 1]));
    }
}

std::span<const ItemIndex> UserItems::items_of(UserIndex user) const {
    if (user + 1 >= offsets_.size()) return {};
    return std::span<const ItemIndex>(items_).subspan(offsets_[user], offsets_[user + 1] - offsets_[user]);
}

bool UserItems::contains(UserIndex user, ItemIndex item) const {
    const auto items = items_of(user);
    return std::binary_search(items.begin(), items.end(), item);
}

}  // namespace margin_bench
