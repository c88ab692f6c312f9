#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace margin_bench {

using UserIndex = std::uint32_t;
using ItemIndex = std::uint32_t;

/// One explicit rating. Raw ids are kept next to the dense indices so that
/// exports can speak the source file's vocabulary.
struct Interaction {
    std::int64_t user_id = 0;
    std::int64_t item_id = 0;
    double rating = 0.0;
    std::optional<std::int64_t> timestamp;
    UserIndex user = 0;
    ItemIndex item = 0;

    friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Bijection between raw ids and 0..size()-1, in order of first appearance.
class IdIndex {
public:
    /// Index for `raw_id`, assigning the next free one if unseen.
    std::uint32_t intern(std::int64_t raw_id);
    std::optional<std::uint32_t> find(std::int64_t raw_id) const;
    std::int64_t raw(std::uint32_t index) const { return raw_ids_.at(index); }
    std::size_t size() const noexcept { return raw_ids_.size(); }
    const std::vector<std::int64_t>& raw_ids() const noexcept { return raw_ids_; }

    friend bool operator==(const IdIndex& a, const IdIndex& b) { return a.raw_ids_ == b.raw_ids_; }

private:
    std::unordered_map<std::int64_t, std::uint32_t> to_index_;
    std::vector<std::int64_t> raw_ids_;
};

/// Immutable rating collection. Partitions produced by split_holdout share
/// the id maps of their source so indices agree across train and test.
class InteractionSet {
public:
    InteractionSet();
    InteractionSet(std::vector<Interaction> interactions, std::shared_ptr<const IdIndex> users,
                   std::shared_ptr<const IdIndex> items);

    const std::vector<Interaction>& interactions() const noexcept { return interactions_; }
    std::size_t size() const noexcept { return interactions_.size(); }
    bool empty() const noexcept { return interactions_.empty(); }

    const IdIndex& users() const noexcept { return *users_; }
    const IdIndex& items() const noexcept { return *items_; }
    std::size_t n_users() const noexcept { return users_->size(); }
    std::size_t n_items() const noexcept { return items_->size(); }

    const std::shared_ptr<const IdIndex>& user_index_ptr() const noexcept { return users_; }
    const std::shared_ptr<const IdIndex>& item_index_ptr() const noexcept { return items_; }

    /// Mean rating, 0 for an empty set.
    double mean_rating() const;

private:
    std::vector<Interaction> interactions_;
    std::shared_ptr<const IdIndex> users_;
    std::shared_ptr<const IdIndex> items_;
};

enum class RatingFormat { movielens_1m, movielens_100k, csv };

RatingFormat parse_rating_format(std::string_view name);
std::string_view to_string(RatingFormat format);

/// Parses ratings from a stream. Errors carry the 1-based line number.
InteractionSet read_ratings(std::istream& in, RatingFormat format);
InteractionSet load_ratings(const std::filesystem::path& path, RatingFormat format);

struct Split {
    InteractionSet train;
    InteractionSet test;
    std::uint64_t seed = 0;
    double test_fraction = 0.0;
};

/// Per-user stratified holdout: round(test_fraction * count) of each user's
/// ratings go to test. Users with a single rating stay in train. Both
/// partitions keep the source order.
Split split_holdout(const InteractionSet& data, double test_fraction, std::uint64_t seed);

/// Compressed per-user item lists (sorted ascending) for one partition.
class UserItems {
public:
    explicit UserItems(const InteractionSet& data);

    std::span<const ItemIndex> items_of(UserIndex user) const;
    bool contains(UserIndex user, ItemIndex item) const;
    std::size_t n_users() const noexcept { return offsets_.size() - 1; }

private:
    std::vector<std::size_t> offsets_;
    std::vector<ItemIndex> items_;
};

}  // namespace margin_bench
