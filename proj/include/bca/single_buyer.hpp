#pragma once
#include "bca/distribution.hpp"
#include "bca/matroid.hpp"
#include "bca/random.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bca {

enum class BuyerKind { budgeted_single_item, unit_demand, additive_budgeted, correlated_matroid };
enum class Objective { revenue, welfare };

struct TypeEntry {
    double prob = 0;
    std::vector<double> values; // per item
};

// Realized type for one trial: per-item values for the independent kinds,
// a type-table index for the correlated kind.
struct BuyerType {
    std::vector<double> values;
    int type_id = -1;
};

struct BuyerModel {
    BuyerKind kind = BuyerKind::budgeted_single_item;
    std::vector<Distribution> distributions; // independent kinds, one per item
    double budget = kInf;
    std::vector<TypeEntry> type_table;       // correlated kind
    Matroid matroid;                         // correlated kind

    double alpha() const; // approximation factor of the kind's mechanism
    void validate(int num_items) const;
    BuyerType sample_type(int num_items, CoinStream& coins) const;
    double value_of(const BuyerType& type, std::span<const int> bundle) const;
};

// One item's price lottery. prob_high == 1 means a single posted price;
// an infinite price is a null offer (item excluded).
struct ItemOffer {
    double high_price = kInf;
    double low_price = kInf;
    double prob_high = 1.0;

    bool is_null() const { return prob_high >= 1.0 && high_price == kInf; }
    double draw(CoinStream& coins) const;
    static ItemOffer null_offer() { return {}; }
    static ItemOffer single(double price) { return {price, price, 1.0}; }
};

struct MenuEntry {
    std::vector<double> marginals; // per item, inside the matroid polytope
    double payment = 0;
};

struct OfferPolicy {
    enum class Kind { item_pricing, menu };
    Kind kind = Kind::item_pricing;
    std::vector<ItemOffer> offers; // item_pricing: per item
    std::vector<MenuEntry> menu;   // menu: indexed by type id
};

struct BuildResult {
    OfferPolicy policy;
    double benchmark_value = 0;
    std::optional<std::vector<double>> exact_rule; // per-item ex-ante allocation probs
};

// Per-item revenue curves reused across cap vectors.
struct BuyerCurves {
    std::vector<RevenueCurve> per_item;
};
BuyerCurves make_buyer_curves(const BuyerModel& model, const CurveOptions& opts);

BuildResult build_budgeted_single_item(const BuyerModel&, double q_bar,
                                       const CurveOptions& opts = {});
BuildResult build_budgeted_single_item(const BuyerModel&, double q_bar, const BuyerCurves&);
BuildResult build_unit_demand(const BuyerModel&, std::span<const double> q_bar,
                              const CurveOptions& opts = {});
BuildResult build_unit_demand(const BuyerModel&, std::span<const double> q_bar,
                              const BuyerCurves&);
BuildResult build_additive_budget(const BuyerModel&, std::span<const double> q_bar,
                                  const CurveOptions& opts = {});
BuildResult build_additive_budget(const BuyerModel&, std::span<const double> q_bar,
                                  const BuyerCurves&);
BuildResult build_correlated_lp(const BuyerModel&, std::span<const double> q_bar, Objective);

// Dispatch on the model kind; curves may be empty for the correlated kind.
BuildResult build_mechanism(const BuyerModel&, std::span<const double> q_bar, Objective,
                            const BuyerCurves& curves);

struct TailSelection {
    std::vector<int> kept; // indices into the price-sorted sequence
    double r1 = 0;
};

// r_j = max(q_j p_j + (1 - q_j) r_{j+1}, r_{j+1}); keeps items with
// p_j >= r_{j+1}. Guarantees r1 >= (1/2) sum q_j p_j when sum q <= 1.
TailSelection tail_select(std::span<const double> prices_ascending, std::span<const double> qs);

// Dependent rounding with exact marginals: systematic sampling over a random
// rotation for uniform matroids, part by part for partition matroids.
std::vector<int> matroid_round(std::span<const double> marginals, const Matroid&,
                               CoinStream& coins);

struct SingleBuyerOutcome {
    std::vector<int> bundle;
    std::optional<int> fractional_item; // partially paid item, if any
    double payment = 0;
    double value = 0; // realized buyer value of the bundle
};

SingleBuyerOutcome sample_outcome(const OfferPolicy&, const BuyerModel&, const BuyerType&,
                                  CoinStream& coins);

} // namespace bca
