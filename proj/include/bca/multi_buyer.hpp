#pragma once
#include "bca/magician.hpp"
#include "bca/single_buyer.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace bca {

struct ItemSpec {
    std::string id;
    int supply = 1;
};

struct MarketSpec {
    std::vector<ItemSpec> items;
    std::vector<BuyerModel> buyers;
    Objective objective = Objective::revenue;
    double gamma = -1; // < 0 means default to gamma_lower_bound(min supply)
    CurveOptions curve_options;
    std::optional<uint64_t> seed; // config-file default; CLI --seed overrides

    int num_items() const { return static_cast<int>(items.size()); }
    int num_buyers() const { return static_cast<int>(buyers.size()); }
    int min_supply() const;
    double effective_gamma() const; // clamped to gamma_lower_bound(min supply)
    void validate() const;
};

struct ExAnteMatrix {
    int buyers = 0;
    int items = 0;
    std::vector<double> q; // row-major

    ExAnteMatrix() = default;
    ExAnteMatrix(int n, int m) : buyers(n), items(m), q(static_cast<size_t>(n) * m, 0.0) {}
    double& at(int i, int j) { return q[static_cast<size_t>(i) * items + j]; }
    double at(int i, int j) const { return q[static_cast<size_t>(i) * items + j]; }
    std::span<const double> row(int i) const {
        return {q.data() + static_cast<size_t>(i) * items, static_cast<size_t>(items)};
    }
};

struct OptBarResult {
    ExAnteMatrix q_bar;
    double value = 0;
};

// The combined relaxation: each buyer's concave benchmark (hull segments, or
// the full menu LP block) under shared expected-supply rows.
OptBarResult solve_opt_bar(const MarketSpec& market);

class SupplyViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Outcome {
    int buyers = 0;
    int items = 0;
    std::vector<uint8_t> allocations; // n x m
    std::vector<uint8_t> opened;      // n x m, magician open decisions
    std::vector<uint8_t> tentative;   // n x m, post-rounding only
    std::vector<uint8_t> fractional;  // n x m, budget-randomized payments
    std::vector<double> payments;     // per buyer
    std::vector<double> values;       // per buyer
    std::vector<int> units_allocated; // per item

    uint8_t& alloc(int i, int j) { return allocations[static_cast<size_t>(i) * items + j]; }
    uint8_t alloc(int i, int j) const { return allocations[static_cast<size_t>(i) * items + j]; }
    double objective_total(Objective obj) const;
};

using TypeProfile = std::vector<BuyerType>;
TypeProfile sample_types(const MarketSpec& market, CoinStream& coins);

// Per-experiment state: the ex-ante matrix, per-buyer revenue curves, and
// mechanism builds memoized by item-availability mask.
class RoundingEngine {
public:
    RoundingEngine(const MarketSpec& market, ExAnteMatrix q_bar);

    Outcome pre_round(std::span<const int> order, const TypeProfile& types, CoinStream& coins);
    Outcome post_round(const TypeProfile& types, CoinStream& coins);

    const BuildResult& build_for_mask(int buyer, uint64_t mask);
    const BuildResult& full_build(int buyer);
    double gamma() const { return gamma_; }

private:
    const MarketSpec* market_;
    ExAnteMatrix q_bar_;
    double gamma_;
    std::vector<BuyerCurves> curves_;
    std::vector<std::map<uint64_t, BuildResult>> cache_;
};

Outcome pre_rounding(const MarketSpec& market, const ExAnteMatrix& q_bar,
                     std::span<const int> order, const TypeProfile& types, CoinStream& coins);
Outcome post_rounding(const MarketSpec& market, const ExAnteMatrix& q_bar,
                      const TypeProfile& types, CoinStream& coins);

// Splits every item into floor(k_j / k) bins of near-equal size; bins become
// new item types and buyer valuations are duplicated across them. Requires
// correlated-capable buyers.
MarketSpec transform_multi_unit(const MarketSpec& market, int demand_divisor);

} // namespace bca
