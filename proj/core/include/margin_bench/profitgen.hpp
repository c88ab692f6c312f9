#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "margin_bench/dataio.hpp"

namespace margin_bench {

/// Truncated Gaussian profit distribution, in dollars.
struct ProfitConfig {
    double mean = 2.0;
    double min = 0.0;
    double max = 4.0;
    double sigma = 1.0;
    std::uint64_t seed = 42;

    void validate() const;
};

struct ProfitTable {
    std::vector<double> profit;  // indexed by ItemIndex

    std::size_t size() const noexcept { return profit.size(); }
    double max_value() const;

    friend bool operator==(const ProfitTable&, const ProfitTable&) = default;
};

/// Draws each profit from N(mean, sigma), redrawing until it lands in
/// [min, max]. Deterministic given the config.
ProfitTable assign_profits(std::size_t n_items, const ProfitConfig& cfg);

/// CSV `item_id,profit` with raw item ids, six decimals, item index order.
void write_profits_csv(const ProfitTable& table, const IdIndex& items, std::ostream& out);
void write_profits_csv(const ProfitTable& table, const IdIndex& items, const std::filesystem::path& path);

/// Every item of `items` must appear exactly once; unknown ids are rejected.
ProfitTable read_profits_csv(std::istream& in, const IdIndex& items);
ProfitTable read_profits_csv(const std::filesystem::path& path, const IdIndex& items);

}  // namespace margin_bench
