#include "margin_bench/profitgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "margin_bench/error.hpp"
#include "margin_bench/random.hpp"

namespace margin_bench {

namespace {

[[noreturn]] void data_error(const std::string& what) { throw Error(ErrorKind::data, "profitgen", what); }

// Beyond this many rejections in a row the window is effectively empty of mass.
constexpr int kMaxRejections = 1'000'000;

}  // namespace

void ProfitConfig::validate() const {
    const auto bad = [](const std::string& what) { throw Error(ErrorKind::usage, "profitgen", what); };
    if (!std::isfinite(mean) || !std::isfinite(min) || !std::isfinite(max) || !std::isfinite(sigma)) {
        bad("profit parameters must be finite");
    }
    if (!(min < max)) bad("profit min must be below max");
    if (!(sigma > 0.0)) bad("profit sigma must be positive");
    if (mean < min || mean > max) bad("profit mean must lie in [min, max]");
}

double ProfitTable::max_value() const {
    return profit.empty() ? 0.0 : *std::max_element(profit.begin(), profit.end());
}

ProfitTable assign_profits(std::size_t n_items, const ProfitConfig& cfg) {
    cfg.validate();
    random::Engine rng(cfg.seed);
    ProfitTable table;
    table.profit.reserve(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
        double draw = 0.0;
        int attempts = 0;
        do {
            if (++attempts > kMaxRejections) {
                throw Error(ErrorKind::numeric, "profitgen", "rejection sampling failed to hit [min, max]");
            }
            draw = cfg.mean + cfg.sigma * random::standard_normal(rng);
        } while (draw < cfg.min || draw > cfg.max);
        table.profit.push_back(draw);
    }
    return table;
}

void write_profits_csv(const ProfitTable& table, const IdIndex& items, std::ostream& out) {
    if (table.size() != items.size()) data_error("profit table size does not match item count");
    out << "item_id,profit\n";
    char buf[64];
    for (std::size_t i = 0; i < table.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%lld,%.6f\n", static_cast<long long>(items.raw(static_cast<ItemIndex>(i))),
                      table.profit[i]);
        out << buf;
    }
}

void write_profits_csv(const ProfitTable& table, const IdIndex& items, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot write '" + path.string() + "'");
    write_profits_csv(table, items, out);
}

ProfitTable read_profits_csv(std::istream& in, const IdIndex& items) {
    ProfitTable table;
    table.profit.assign(items.size(), 0.0);
    std::vector<char> filled(items.size(), 0);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.starts_with("item_id")) continue;
        const auto comma = line.find(',');
        std::int64_t raw = 0;
        double value = 0.0;
        const char* end = line.data() + line.size();
        const bool ok = comma != std::string::npos &&
                        std::from_chars(line.data(), line.data() + comma, raw).ptr == line.data() + comma &&
                        std::from_chars(line.data() + comma + 1, end, value).ptr == end;
        if (!ok || !std::isfinite(value)) data_error("line " + std::to_string(line_no) + ": malformed profit row");
        const auto index = items.find(raw);
        if (!index) data_error("line " + std::to_string(line_no) + ": unknown item id " + std::to_string(raw));
        if (filled[*index]) data_error("line " + std::to_string(line_no) + ": duplicate item id " + std::to_string(raw));
        filled[*index] = 1;
        table.profit[*index] = value;
    }
    if (const auto missing = std::find(filled.begin(), filled.end(), 0); missing != filled.end()) {
        const auto index = static_cast<ItemIndex>(missing - filled.begin());
        data_error("no profit for item id " + std::to_string(items.raw(index)));
    }
    return table;
}

ProfitTable read_profits_csv(const std::filesystem::path& path, const IdIndex& items) {
    std::ifstream in(path);
    if (!in) data_error("cannot open '" + path.string() + "'");
    return read_profits_csv(in, items);
}

}  // namespace margin_bench
