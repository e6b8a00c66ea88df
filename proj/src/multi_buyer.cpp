#include "bca/multi_buyer.hpp"

#include "bca/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bca {

int MarketSpec::min_supply() const {
    int k = items.empty() ? 1 : items.front().supply;
    for (const ItemSpec& item : items) k = std::min(k, item.supply);
    return k;
}

double MarketSpec::effective_gamma() const {
    const double bound = gamma_lower_bound(min_supply());
    if (gamma < 0) return bound;
    return std::min(gamma, bound);
}

void MarketSpec::validate() const {
    if (items.empty()) throw std::invalid_argument("market: no items");
    if (static_cast<int>(items.size()) > 64)
        throw std::invalid_argument("market: at most 64 items supported");
    for (const ItemSpec& item : items)
        if (item.supply < 1) throw std::invalid_argument("market: supply must be >= 1");
    for (const BuyerModel& buyer : buyers) buyer.validate(num_items());
    if (gamma > 1.0) throw std::invalid_argument("market: gamma must be <= 1");
    if (objective == Objective::welfare) {
        for (const BuyerModel& buyer : buyers)
            if (buyer.kind != BuyerKind::correlated_matroid)
                throw std::invalid_argument(
                    "market: welfare objective requires correlated_matroid buyers");
    }
}

double Outcome::objective_total(Objective obj) const {
    double total = 0;
    if (obj == Objective::revenue)
        for (double p : payments) total += p;
    else
        for (double v : values) total += v;
    return total;
}

TypeProfile sample_types(const MarketSpec& market, CoinStream& coins) {
    TypeProfile types;
    types.reserve(market.buyers.size());
    for (const BuyerModel& buyer : market.buyers)
        types.push_back(buyer.sample_type(market.num_items(), coins));
    return types;
}

namespace {

// Appends one buyer's benchmark block to the combined LP. Returns, per item,
// the (var, coef) terms whose sum is that buyer's ex-ante allocation q_bar_ij.
std::vector<std::vector<std::pair<int, double>>>
append_buyer_block(LinearProgram& lp, const BuyerModel& buyer, const BuyerCurves& curves,
                   Objective objective, int num_items) {
    std::vector<std::vector<std::pair<int, double>>> alloc_terms(
        static_cast<size_t>(num_items));

    if (buyer.kind == BuyerKind::correlated_matroid) {
        const int T = static_cast<int>(buyer.type_table.size());
        const int m = num_items;
        std::vector<int> x_vars(static_cast<size_t>(T) * m);
        for (int t = 0; t < T; ++t)
            for (int j = 0; j < m; ++j) {
                const double coef = objective == Objective::welfare
                                        ? buyer.type_table[t].prob * buyer.type_table[t].values[j]
                                        : 0.0;
                x_vars[static_cast<size_t>(t) * m + j] = lp.add_variable(coef, 0.0, 1.0);
            }
        std::vector<int> p_vars(static_cast<size_t>(T));
        for (int t = 0; t < T; ++t) {
            const double coef = objective == Objective::revenue ? buyer.type_table[t].prob : 0.0;
            p_vars[static_cast<size_t>(t)] = lp.add_variable(coef, 0.0, buyer.budget);
        }
        const auto matroid_rows = buyer.matroid.constraints();
        for (int t = 0; t < T; ++t) {
            for (const auto& c : matroid_rows) {
                std::vector<std::pair<int, double>> row;
                for (int j : c.items) row.push_back({x_vars[static_cast<size_t>(t) * m + j], 1.0});
                lp.add_row(row, Relation::le, static_cast<double>(c.bound));
            }
            const auto& vt = buyer.type_table[t].values;
            for (int u = 0; u < T; ++u) {
                if (u == t) continue;
                std::vector<std::pair<int, double>> row;
                for (int j = 0; j < m; ++j) {
                    row.push_back({x_vars[static_cast<size_t>(t) * m + j], vt[j]});
                    row.push_back({x_vars[static_cast<size_t>(u) * m + j], -vt[j]});
                }
                row.push_back({p_vars[static_cast<size_t>(t)], -1.0});
                row.push_back({p_vars[static_cast<size_t>(u)], 1.0});
                lp.add_row(row, Relation::ge, 0.0);
            }
            std::vector<std::pair<int, double>> ir;
            for (int j = 0; j < m; ++j) ir.push_back({x_vars[static_cast<size_t>(t) * m + j], vt[j]});
            ir.push_back({p_vars[static_cast<size_t>(t)], -1.0});
            lp.add_row(ir, Relation::ge, 0.0);
        }
        for (int j = 0; j < m; ++j)
            for (int t = 0; t < T; ++t)
                alloc_terms[static_cast<size_t>(j)].push_back(
                    {x_vars[static_cast<size_t>(t) * m + j], buyer.type_table[t].prob});
        return alloc_terms;
    }

    // hull-based kinds: one variable per ascending-hull segment
    std::vector<std::pair<int, double>> value_terms; // (var, slope)
    for (int j = 0; j < num_items; ++j) {
        const PiecewiseLinear hull = curves.per_item[static_cast<size_t>(j)].ascending_hull();
        const auto& pts = hull.points();
        for (size_t s = 1; s < pts.size(); ++s) {
            const double width = pts[s].x - pts[s - 1].x;
            if (width <= 0) continue;
            const double slope = (pts[s].y - pts[s - 1].y) / width;
            if (slope <= 0) continue;
            const int var = lp.add_variable(0.0, 0.0, width);
            alloc_terms[static_cast<size_t>(j)].push_back({var, 1.0});
            value_terms.push_back({var, slope});
        }
    }

    switch (buyer.kind) {
    case BuyerKind::budgeted_single_item:
    case BuyerKind::unit_demand: {
        // objective picks up the hull value directly
        for (auto& [var, slope] : value_terms) lp.objective[static_cast<size_t>(var)] = slope;
        if (buyer.kind == BuyerKind::unit_demand) {
            std::vector<std::pair<int, double>> row;
            for (const auto& per_item : alloc_terms)
                for (const auto& term : per_item) row.push_back(term);
            lp.add_row(row, Relation::le, 1.0);
        }
        break;
    }
    case BuyerKind::additive_budgeted: {
        // epigraph variable t <= sum of hull values, t <= budget
        const int t_var = lp.add_variable(1.0, 0.0, buyer.budget);
        std::vector<std::pair<int, double>> row{{t_var, 1.0}};
        for (auto& [var, slope] : value_terms) row.push_back({var, -slope});
        lp.add_row(row, Relation::le, 0.0);
        break;
    }
    default:
        throw std::invalid_argument("append_buyer_block: unsupported buyer kind");
    }
    return alloc_terms;
}

} // namespace

OptBarResult solve_opt_bar(const MarketSpec& market) {
    market.validate();
    const int n = market.num_buyers();
    const int m = market.num_items();

    LinearProgram lp;
    std::vector<std::vector<std::vector<std::pair<int, double>>>> alloc_terms;
    alloc_terms.reserve(static_cast<size_t>(n));
    for (const BuyerModel& buyer : market.buyers) {
        const BuyerCurves curves = make_buyer_curves(buyer, market.curve_options);
        alloc_terms.push_back(
            append_buyer_block(lp, buyer, curves, market.objective, m));
    }
    for (int j = 0; j < m; ++j) {
        std::vector<std::pair<int, double>> supply_row;
        for (int i = 0; i < n; ++i)
            for (const auto& term : alloc_terms[static_cast<size_t>(i)][static_cast<size_t>(j)])
                supply_row.push_back(term);
        lp.add_row(supply_row, Relation::le, static_cast<double>(market.items[j].supply));
    }

    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error("solve_opt_bar: combined program did not solve");

    OptBarResult result;
    result.q_bar = ExAnteMatrix(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double q = 0;
            for (const auto& [var, coef] : alloc_terms[static_cast<size_t>(i)][static_cast<size_t>(j)])
                q += coef * sol.values[static_cast<size_t>(var)];
            result.q_bar.at(i, j) = std::clamp(q, 0.0, 1.0);
        }
    result.value = sol.objective_value;
    return result;
}

RoundingEngine::RoundingEngine(const MarketSpec& market, ExAnteMatrix q_bar)
    : market_(&market), q_bar_(std::move(q_bar)), gamma_(market.effective_gamma()) {
    market.validate();
    if (q_bar_.buyers != market.num_buyers() || q_bar_.items != market.num_items())
        throw std::invalid_argument("rounding engine: q_bar dimensions mismatch");
    curves_.reserve(market.buyers.size());
    for (const BuyerModel& buyer : market.buyers)
        curves_.push_back(make_buyer_curves(buyer, market.curve_options));
    cache_.resize(market.buyers.size());
}

const BuildResult& RoundingEngine::build_for_mask(int buyer, uint64_t mask) {
    auto& per_buyer = cache_[static_cast<size_t>(buyer)];
    auto it = per_buyer.find(mask);
    if (it != per_buyer.end()) return it->second;
    const int m = market_->num_items();
    std::vector<double> caps(static_cast<size_t>(m), 0.0);
    for (int j = 0; j < m; ++j)
        if (mask & (uint64_t{1} << j)) caps[static_cast<size_t>(j)] = q_bar_.at(buyer, j);
    BuildResult built = build_mechanism(market_->buyers[static_cast<size_t>(buyer)], caps,
                                        market_->objective, curves_[static_cast<size_t>(buyer)]);
    return per_buyer.emplace(mask, std::move(built)).first->second;
}

const BuildResult& RoundingEngine::full_build(int buyer) {
    const int m = market_->num_items();
    const uint64_t full = m == 64 ? ~uint64_t{0} : ((uint64_t{1} << m) - 1);
    return build_for_mask(buyer, full);
}

namespace {

Outcome make_outcome(int n, int m) {
    Outcome out;
    out.buyers = n;
    out.items = m;
    out.allocations.assign(static_cast<size_t>(n) * m, 0);
    out.opened.assign(static_cast<size_t>(n) * m, 0);
    out.tentative.assign(static_cast<size_t>(n) * m, 0);
    out.fractional.assign(static_cast<size_t>(n) * m, 0);
    out.payments.assign(static_cast<size_t>(n), 0.0);
    out.values.assign(static_cast<size_t>(n), 0.0);
    out.units_allocated.assign(static_cast<size_t>(m), 0);
    return out;
}

void count_unit(Outcome& out, const MarketSpec& market, int buyer, int item) {
    out.alloc(buyer, item) = 1;
    int& units = out.units_allocated[static_cast<size_t>(item)];
    if (++units > market.items[static_cast<size_t>(item)].supply)
        throw SupplyViolation("item " + market.items[static_cast<size_t>(item)].id +
                              " over-allocated");
}

} // namespace

Outcome RoundingEngine::pre_round(std::span<const int> order, const TypeProfile& types,
                                  CoinStream& coins) {
    const int n = market_->num_buyers();
    const int m = market_->num_items();
    if (static_cast<int>(order.size()) != n)
        throw std::invalid_argument("pre_round: order must list every buyer");
    if (static_cast<int>(types.size()) != n)
        throw std::invalid_argument("pre_round: type profile size mismatch");

    Outcome out = make_outcome(n, m);
    std::vector<Magician> magicians;
    magicians.reserve(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j)
        magicians.emplace_back(MagicianConfig{gamma_, market_->items[static_cast<size_t>(j)].supply});
    std::vector<int> broken(static_cast<size_t>(m), 0);

    for (int i : order) {
        uint64_t mask = 0;
        for (int j = 0; j < m; ++j) {
            const BoxPolicy policy = magicians[static_cast<size_t>(j)].offer_box(q_bar_.at(i, j));
            if (realize_open(policy, broken[static_cast<size_t>(j)], coins.next())) {
                mask |= uint64_t{1} << j;
                out.opened[static_cast<size_t>(i) * m + j] = 1;
            }
        }
        const BuildResult& build = build_for_mask(i, mask);
        const SingleBuyerOutcome so =
            sample_outcome(build.policy, market_->buyers[static_cast<size_t>(i)],
                           types[static_cast<size_t>(i)], coins);
        for (int j : so.bundle) {
            count_unit(out, *market_, i, j);
            ++broken[static_cast<size_t>(j)];
        }
        if (so.fractional_item)
            out.fractional[static_cast<size_t>(i) * m + *so.fractional_item] = 1;
        out.payments[static_cast<size_t>(i)] = so.payment;
        out.values[static_cast<size_t>(i)] = so.value;
    }
    return out;
}

Outcome RoundingEngine::post_round(const TypeProfile& types, CoinStream& coins) {
    const int n = market_->num_buyers();
    const int m = market_->num_items();
    if (static_cast<int>(types.size()) != n)
        throw std::invalid_argument("post_round: type profile size mismatch");

    // tentative outcomes from the independent single-buyer runs
    std::vector<SingleBuyerOutcome> tentative;
    tentative.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const BuildResult& build = full_build(i);
        if (!build.exact_rule)
            throw std::invalid_argument(
                "post_round: buyer " + std::to_string(i) +
                " uses a mechanism without an exact ex-ante allocation rule");
        tentative.push_back(sample_outcome(build.policy, market_->buyers[static_cast<size_t>(i)],
                                           types[static_cast<size_t>(i)], coins));
    }

    Outcome out = make_outcome(n, m);
    std::vector<Magician> magicians;
    magicians.reserve(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j)
        magicians.emplace_back(MagicianConfig{gamma_, market_->items[static_cast<size_t>(j)].supply});
    std::vector<int> broken(static_cast<size_t>(m), 0);

    for (int i = 0; i < n; ++i) {
        const std::vector<double>& exact = *full_build(i).exact_rule;
        std::vector<uint8_t> open(static_cast<size_t>(m), 0);
        for (int j = 0; j < m; ++j) {
            const BoxPolicy policy =
                magicians[static_cast<size_t>(j)].offer_box(exact[static_cast<size_t>(j)]);
            if (realize_open(policy, broken[static_cast<size_t>(j)], coins.next())) {
                open[static_cast<size_t>(j)] = 1;
                out.opened[static_cast<size_t>(i) * m + j] = 1;
            }
        }
        const SingleBuyerOutcome& so = tentative[static_cast<size_t>(i)];
        for (int j : so.bundle) {
            out.tentative[static_cast<size_t>(i) * m + j] = 1;
            if (!open[static_cast<size_t>(j)]) continue;
            count_unit(out, *market_, i, j);
            ++broken[static_cast<size_t>(j)];
            out.values[static_cast<size_t>(i)] +=
                types[static_cast<size_t>(i)].values[static_cast<size_t>(j)];
        }
        if (so.fractional_item)
            out.fractional[static_cast<size_t>(i) * m + *so.fractional_item] = 1;
        out.payments[static_cast<size_t>(i)] = gamma_ * so.payment;
    }
    return out;
}

Outcome pre_rounding(const MarketSpec& market, const ExAnteMatrix& q_bar,
                     std::span<const int> order, const TypeProfile& types, CoinStream& coins) {
    RoundingEngine engine(market, q_bar);
    return engine.pre_round(order, types, coins);
}

Outcome post_rounding(const MarketSpec& market, const ExAnteMatrix& q_bar,
                      const TypeProfile& types, CoinStream& coins) {
    RoundingEngine engine(market, q_bar);
    return engine.post_round(types, coins);
}

MarketSpec transform_multi_unit(const MarketSpec& market, int demand_divisor) {
    if (demand_divisor < 1) throw std::invalid_argument("transform: divisor must be >= 1");
    market.validate();
    for (const BuyerModel& buyer : market.buyers)
        if (buyer.kind != BuyerKind::correlated_matroid)
            throw std::invalid_argument(
                "transform: buyers must use correlated-capable mechanisms");

    MarketSpec out;
    out.objective = market.objective;
    out.gamma = market.gamma;
    out.curve_options = market.curve_options;

    std::vector<int> origin_of_bin;
    for (size_t orig = 0; orig < market.items.size(); ++orig) {
        const ItemSpec& item = market.items[orig];
        if (item.supply < demand_divisor)
            throw std::invalid_argument("transform: item " + item.id + " has supply below k");
        const int bins = item.supply / demand_divisor;
        const int base = item.supply / bins;
        const int remainder = item.supply % bins;
        for (int b = 0; b < bins; ++b) {
            ItemSpec bin;
            bin.id = item.id + "#" + std::to_string(b);
            bin.supply = base + (b < remainder ? 1 : 0);
            origin_of_bin.push_back(static_cast<int>(orig));
            out.items.push_back(std::move(bin));
        }
    }
    const int new_m = static_cast<int>(out.items.size());

    for (const BuyerModel& buyer : market.buyers) {
        BuyerModel nb;
        nb.kind = BuyerKind::correlated_matroid;
        nb.budget = buyer.budget;
        for (const TypeEntry& entry : buyer.type_table) {
            TypeEntry ne;
            ne.prob = entry.prob;
            ne.values.reserve(static_cast<size_t>(new_m));
            for (int b = 0; b < new_m; ++b)
                ne.values.push_back(entry.values[static_cast<size_t>(origin_of_bin[b])]);
            nb.type_table.push_back(std::move(ne));
        }
        if (buyer.matroid.kind == Matroid::Kind::uniform) {
            nb.matroid = Matroid::uniform_matroid(new_m, buyer.matroid.rank);
        } else {
            std::vector<std::vector<int>> parts(buyer.matroid.capacities.size());
            for (int b = 0; b < new_m; ++b) {
                const int orig = origin_of_bin[static_cast<size_t>(b)];
                parts[static_cast<size_t>(buyer.matroid.part_of[static_cast<size_t>(orig)])]
                    .push_back(b);
            }
            nb.matroid = Matroid::partition_matroid(new_m, parts, buyer.matroid.capacities);
        }
        out.buyers.push_back(std::move(nb));
    }
    return out;
}

} // namespace bca
