#include "bca/single_buyer.hpp"

#include "bca/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bca {

double BuyerModel::alpha() const {
    switch (kind) {
    case BuyerKind::budgeted_single_item: return 1.0;
    case BuyerKind::unit_demand: return 0.5;
    case BuyerKind::additive_budgeted: return 1.0 - std::exp(-1.0);
    case BuyerKind::correlated_matroid: return 1.0;
    }
    return 1.0;
}

void BuyerModel::validate(int num_items) const {
    switch (kind) {
    case BuyerKind::budgeted_single_item:
        if (num_items != 1)
            throw std::invalid_argument("budgeted_single_item buyer requires a 1-item market");
        if (distributions.size() != 1)
            throw std::invalid_argument("budgeted_single_item buyer needs exactly 1 distribution");
        if (!(budget > 0)) throw std::invalid_argument("budget must be positive");
        break;
    case BuyerKind::unit_demand:
        if (static_cast<int>(distributions.size()) != num_items)
            throw std::invalid_argument("unit_demand buyer: distribution count != item count");
        if (std::isfinite(budget))
            throw std::invalid_argument("unit_demand buyer cannot carry a budget");
        break;
    case BuyerKind::additive_budgeted:
        if (static_cast<int>(distributions.size()) != num_items)
            throw std::invalid_argument("additive buyer: distribution count != item count");
        if (!(budget > 0)) throw std::invalid_argument("budget must be positive");
        break;
    case BuyerKind::correlated_matroid: {
        if (type_table.empty()) throw std::invalid_argument("correlated buyer: empty type table");
        double total = 0;
        for (const TypeEntry& t : type_table) {
            if (t.prob < 0) throw std::invalid_argument("correlated buyer: negative probability");
            if (static_cast<int>(t.values.size()) != num_items)
                throw std::invalid_argument("correlated buyer: valuation size != item count");
            total += t.prob;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("correlated buyer: type probabilities sum to " +
                                        std::to_string(total));
        if (matroid.ground != num_items)
            throw std::invalid_argument("correlated buyer: matroid ground != item count");
        if (!(budget > 0)) throw std::invalid_argument("budget must be positive");
        break;
    }
    }
}

BuyerType BuyerModel::sample_type(int num_items, CoinStream& coins) const {
    BuyerType type;
    if (kind == BuyerKind::correlated_matroid) {
        const double coin = coins.next();
        double cum = 0;
        int id = static_cast<int>(type_table.size()) - 1;
        for (size_t t = 0; t < type_table.size(); ++t) {
            cum += type_table[t].prob;
            if (coin < cum) {
                id = static_cast<int>(t);
                break;
            }
        }
        type.type_id = id;
        type.values = type_table[static_cast<size_t>(id)].values;
    } else {
        type.values.resize(static_cast<size_t>(num_items));
        for (int j = 0; j < num_items; ++j)
            type.values[static_cast<size_t>(j)] = distributions[static_cast<size_t>(j)].sample(coins.next());
    }
    return type;
}

double BuyerModel::value_of(const BuyerType& type, std::span<const int> bundle) const {
    double total = 0;
    for (int j : bundle) total += type.values[static_cast<size_t>(j)];
    return total;
}

double ItemOffer::draw(CoinStream& coins) const {
    if (prob_high >= 1.0) return high_price;
    return coins.next() < prob_high ? high_price : low_price;
}

BuyerCurves make_buyer_curves(const BuyerModel& model, const CurveOptions& opts) {
    BuyerCurves curves;
    if (model.kind == BuyerKind::correlated_matroid) return curves;
    const double budget =
        model.kind == BuyerKind::unit_demand ? kInf : model.budget;
    curves.per_item.reserve(model.distributions.size());
    for (const Distribution& d : model.distributions)
        curves.per_item.push_back(revenue_curve(d, budget, opts));
    return curves;
}

namespace {

ItemOffer offer_from_split(const RevenueCurve::Split& s) {
    if (s.at_vertex) return ItemOffer::single(s.lo.price);
    return ItemOffer{s.lo.price, s.hi.price, s.theta};
}

void check_cap(double q) {
    if (!(q >= 0.0 && q <= 1.0 + 1e-9)) throw std::invalid_argument("ex-ante cap outside [0, 1]");
}

} // namespace

BuildResult build_budgeted_single_item(const BuyerModel& model, double q_bar,
                                       const CurveOptions& opts) {
    return build_budgeted_single_item(model, q_bar, make_buyer_curves(model, opts));
}

BuildResult build_budgeted_single_item(const BuyerModel& model, double q_bar,
                                       const BuyerCurves& curves) {
    if (model.kind != BuyerKind::budgeted_single_item)
        throw std::invalid_argument("build_budgeted_single_item: wrong buyer kind");
    check_cap(q_bar);
    const RevenueCurve& curve = curves.per_item.at(0);
    const double q_star = std::min(q_bar, curve.peak_q());
    const auto split = curve.split(q_star);
    BuildResult result;
    result.policy.kind = OfferPolicy::Kind::item_pricing;
    result.policy.offers = {offer_from_split(split)};
    result.benchmark_value = curve.value(q_star);
    result.exact_rule = std::vector<double>{q_star};
    return result;
}

BuildResult build_unit_demand(const BuyerModel& model, std::span<const double> q_bar,
                              const CurveOptions& opts) {
    return build_unit_demand(model, q_bar, make_buyer_curves(model, opts));
}

BuildResult build_unit_demand(const BuyerModel& model, std::span<const double> q_bar,
                              const BuyerCurves& curves) {
    if (model.kind != BuyerKind::unit_demand)
        throw std::invalid_argument("build_unit_demand: wrong buyer kind");
    const size_t m = model.distributions.size();
    if (q_bar.size() != m) throw std::invalid_argument("build_unit_demand: cap size mismatch");
    for (double q : q_bar) check_cap(q);
    for (size_t j = 0; j < m; ++j) {
        if (!check_regular(model.distributions[j], 512))
            throw std::invalid_argument("build_unit_demand: item " + std::to_string(j) +
                                        " has a non-regular distribution");
    }

    std::vector<PiecewiseLinear> hulls;
    hulls.reserve(m);
    for (const RevenueCurve& c : curves.per_item) hulls.push_back(c.ascending_hull());
    const auto wf = greedy_waterfill(hulls, q_bar, 1.0);

    struct Priced {
        double price;
        double q;
        int item;
    };
    std::vector<Priced> active;
    for (size_t j = 0; j < m; ++j) {
        if (wf.q[j] > 1e-12)
            active.push_back({model.distributions[j].quantile(1.0 - wf.q[j]), wf.q[j],
                              static_cast<int>(j)});
    }
    std::sort(active.begin(), active.end(), [](const Priced& a, const Priced& b) {
        if (a.price != b.price) return a.price < b.price;
        return a.item < b.item;
    });
    std::vector<double> prices, qs;
    for (const Priced& p : active) {
        prices.push_back(p.price);
        qs.push_back(p.q);
    }
    const TailSelection tail = tail_select(prices, qs);

    BuildResult result;
    result.policy.kind = OfferPolicy::Kind::item_pricing;
    result.policy.offers.assign(m, ItemOffer::null_offer());
    for (int pos : tail.kept)
        result.policy.offers[static_cast<size_t>(active[static_cast<size_t>(pos)].item)] =
            ItemOffer::single(active[static_cast<size_t>(pos)].price);
    result.benchmark_value = wf.value;
    return result;
}

TailSelection tail_select(std::span<const double> prices_ascending, std::span<const double> qs) {
    if (prices_ascending.size() != qs.size())
        throw std::invalid_argument("tail_select: size mismatch");
    double total_q = 0;
    for (size_t j = 0; j < qs.size(); ++j) {
        if (qs[j] < 0 || prices_ascending[j] < 0)
            throw std::invalid_argument("tail_select: negative input");
        total_q += qs[j];
    }
    if (total_q > 1.0 + 1e-9) throw std::invalid_argument("tail_select: sum of qs exceeds 1");

    const int n = static_cast<int>(qs.size());
    std::vector<double> r(static_cast<size_t>(n) + 1, 0.0);
    for (int j = n - 1; j >= 0; --j) {
        const double take = qs[j] * prices_ascending[j] + (1.0 - qs[j]) * r[j + 1];
        r[j] = std::max(take, r[j + 1]);
    }
    TailSelection sel;
    sel.r1 = r[0];
    for (int j = 0; j < n; ++j)
        if (prices_ascending[j] >= r[j + 1]) sel.kept.push_back(j);
    return sel;
}

BuildResult build_additive_budget(const BuyerModel& model, std::span<const double> q_bar,
                                  const CurveOptions& opts) {
    return build_additive_budget(model, q_bar, make_buyer_curves(model, opts));
}

BuildResult build_additive_budget(const BuyerModel& model, std::span<const double> q_bar,
                                  const BuyerCurves& curves) {
    if (model.kind != BuyerKind::additive_budgeted)
        throw std::invalid_argument("build_additive_budget: wrong buyer kind");
    const size_t m = model.distributions.size();
    if (q_bar.size() != m) throw std::invalid_argument("build_additive_budget: cap size mismatch");
    BuildResult result;
    result.policy.kind = OfferPolicy::Kind::item_pricing;
    double sum = 0;
    for (size_t j = 0; j < m; ++j) {
        check_cap(q_bar[j]);
        const RevenueCurve& curve = curves.per_item[j];
        const double q_star = std::min(q_bar[j], curve.peak_q());
        result.policy.offers.push_back(offer_from_split(curve.split(q_star)));
        sum += curve.value(q_star);
    }
    result.benchmark_value = std::min(sum, model.budget);
    return result;
}

BuildResult build_correlated_lp(const BuyerModel& model, std::span<const double> q_bar,
                                Objective objective) {
    if (model.kind != BuyerKind::correlated_matroid)
        throw std::invalid_argument("build_correlated_lp: wrong buyer kind");
    const int m = model.matroid.ground;
    const int T = static_cast<int>(model.type_table.size());
    if (static_cast<int>(q_bar.size()) != m)
        throw std::invalid_argument("build_correlated_lp: cap size mismatch");
    for (double q : q_bar) check_cap(q);

    LinearProgram lp;
    auto x_var = [m](int t, int j) { return t * m + j; };
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < m; ++j) {
            const double coef = objective == Objective::welfare
                                    ? model.type_table[t].prob * model.type_table[t].values[j]
                                    : 0.0;
            lp.add_variable(coef, 0.0, 1.0);
        }
    }
    const int p_begin = T * m;
    for (int t = 0; t < T; ++t) {
        const double coef = objective == Objective::revenue ? model.type_table[t].prob : 0.0;
        lp.add_variable(coef, 0.0, model.budget);
    }

    // marginal caps: sum_t f(t) x_{t,j} <= q_bar_j
    for (int j = 0; j < m; ++j) {
        std::vector<std::pair<int, double>> row;
        for (int t = 0; t < T; ++t) row.push_back({x_var(t, j), model.type_table[t].prob});
        lp.add_row(row, Relation::le, q_bar[j]);
    }
    // matroid polytope rows per type
    const auto matroid_rows = model.matroid.constraints();
    for (int t = 0; t < T; ++t) {
        for (const auto& c : matroid_rows) {
            std::vector<std::pair<int, double>> row;
            for (int j : c.items) row.push_back({x_var(t, j), 1.0});
            lp.add_row(row, Relation::le, static_cast<double>(c.bound));
        }
    }
    // incentive compatibility between every ordered type pair, plus
    // participation: reporting truthfully beats deviating or walking away
    for (int t = 0; t < T; ++t) {
        const auto& vt = model.type_table[t].values;
        for (int u = 0; u < T; ++u) {
            if (u == t) continue;
            std::vector<std::pair<int, double>> row;
            for (int j = 0; j < m; ++j) {
                row.push_back({x_var(t, j), vt[j]});
                row.push_back({x_var(u, j), -vt[j]});
            }
            row.push_back({p_begin + t, -1.0});
            row.push_back({p_begin + u, 1.0});
            lp.add_row(row, Relation::ge, 0.0);
        }
        std::vector<std::pair<int, double>> ir;
        for (int j = 0; j < m; ++j) ir.push_back({x_var(t, j), vt[j]});
        ir.push_back({p_begin + t, -1.0});
        lp.add_row(ir, Relation::ge, 0.0);
    }

    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error("build_correlated_lp: LP did not solve to optimality");

    BuildResult result;
    result.policy.kind = OfferPolicy::Kind::menu;
    result.policy.menu.resize(static_cast<size_t>(T));
    std::vector<double> exact(static_cast<size_t>(m), 0.0);
    for (int t = 0; t < T; ++t) {
        MenuEntry& entry = result.policy.menu[static_cast<size_t>(t)];
        entry.marginals.resize(static_cast<size_t>(m));
        for (int j = 0; j < m; ++j) {
            const double x = std::clamp(sol.values[static_cast<size_t>(x_var(t, j))], 0.0, 1.0);
            entry.marginals[static_cast<size_t>(j)] = x;
            exact[static_cast<size_t>(j)] += model.type_table[t].prob * x;
        }
        entry.payment = std::max(0.0, sol.values[static_cast<size_t>(p_begin + t)]);
    }
    result.benchmark_value = sol.objective_value;
    result.exact_rule = std::move(exact);
    return result;
}

BuildResult build_mechanism(const BuyerModel& model, std::span<const double> q_bar,
                            Objective objective, const BuyerCurves& curves) {
    switch (model.kind) {
    case BuyerKind::budgeted_single_item:
        return build_budgeted_single_item(model, q_bar.empty() ? 0.0 : q_bar[0], curves);
    case BuyerKind::unit_demand:
        return build_unit_demand(model, q_bar, curves);
    case BuyerKind::additive_budgeted:
        return build_additive_budget(model, q_bar, curves);
    case BuyerKind::correlated_matroid:
        return build_correlated_lp(model, q_bar, objective);
    }
    throw std::invalid_argument("build_mechanism: unknown buyer kind");
}

namespace {

// Systematic sampling: points U, U+1, ... over the cumulative marginals of a
// rotated item order. Pr[j selected] = marginals[j] exactly, cardinality never
// exceeds ceil(sum) <= bound.
void systematic_sample(std::span<const int> items, std::span<const double> marginals, int bound,
                       CoinStream& coins, std::vector<int>& out) {
    double sum = 0;
    for (int j : items) sum += marginals[static_cast<size_t>(j)];
    if (sum > bound + 1e-6)
        throw std::invalid_argument("matroid_round: marginals outside the matroid polytope");
    const double scale = sum > bound ? bound / sum : 1.0;
    const size_t n = items.size();
    if (n == 0) return;
    const size_t start = static_cast<size_t>(coins.next_below(n));
    const double u = coins.next();
    double cum = 0;
    int taken = 0; // the cardinality cap is a hard guarantee, not a tolerance
    for (size_t idx = 0; idx < n; ++idx) {
        const int j = items[(start + idx) % n];
        const double lo = cum;
        cum += marginals[static_cast<size_t>(j)] * scale;
        const double k = std::max(0.0, std::ceil(lo - u));
        if (u + k < cum && taken < bound) {
            out.push_back(j);
            ++taken;
        }
    }
}

} // namespace

std::vector<int> matroid_round(std::span<const double> marginals, const Matroid& matroid,
                               CoinStream& coins) {
    if (static_cast<int>(marginals.size()) != matroid.ground)
        throw std::invalid_argument("matroid_round: marginal size mismatch");
    for (double x : marginals)
        if (x < -1e-9 || x > 1.0 + 1e-6)
            throw std::invalid_argument("matroid_round: marginal outside [0, 1]");
    std::vector<int> out;
    if (matroid.kind == Matroid::Kind::uniform) {
        std::vector<int> all(static_cast<size_t>(matroid.ground));
        std::iota(all.begin(), all.end(), 0);
        systematic_sample(all, marginals, matroid.rank, coins, out);
    } else {
        std::vector<std::vector<int>> parts(matroid.capacities.size());
        for (int j = 0; j < matroid.ground; ++j)
            parts[static_cast<size_t>(matroid.part_of[static_cast<size_t>(j)])].push_back(j);
        for (size_t p = 0; p < parts.size(); ++p)
            systematic_sample(parts[p], marginals, matroid.capacities[p], coins, out);
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

struct PricedSurplus {
    double surplus;
    double price;
    int item;
};

SingleBuyerOutcome run_item_pricing(const OfferPolicy& policy, const BuyerModel& model,
                                    const BuyerType& type, CoinStream& coins) {
    const size_t m = policy.offers.size();
    std::vector<double> price(m, kInf);
    for (size_t j = 0; j < m; ++j)
        if (!policy.offers[j].is_null()) price[j] = policy.offers[j].draw(coins);

    SingleBuyerOutcome out;
    std::vector<PricedSurplus> wanted;
    for (size_t j = 0; j < m; ++j) {
        if (!std::isfinite(price[j])) continue;
        const double v = type.values[j];
        if (v >= price[j]) wanted.push_back({v - price[j], price[j], static_cast<int>(j)});
    }
    if (wanted.empty()) return out;

    // prefer higher surplus; among equal surpluses the cheaper item
    std::sort(wanted.begin(), wanted.end(), [](const PricedSurplus& a, const PricedSurplus& b) {
        if (a.surplus != b.surplus) return a.surplus > b.surplus;
        if (a.price != b.price) return a.price < b.price;
        return a.item < b.item;
    });

    if (model.kind == BuyerKind::unit_demand) {
        const PricedSurplus& best = wanted.front();
        out.bundle.push_back(best.item);
        out.payment = best.price;
        out.value = type.values[static_cast<size_t>(best.item)];
        return out;
    }

    // additive purchase with budget randomization on the last item
    double remaining = model.budget;
    for (const PricedSurplus& w : wanted) {
        if (w.price <= remaining) {
            remaining -= w.price;
            out.payment += w.price;
            out.bundle.push_back(w.item);
            out.value += type.values[static_cast<size_t>(w.item)];
        } else if (remaining > 0) {
            out.payment += remaining;
            out.fractional_item = w.item;
            if (coins.next() < remaining / w.price) {
                out.bundle.push_back(w.item);
                out.value += type.values[static_cast<size_t>(w.item)];
            }
            remaining = 0;
            break;
        } else {
            break;
        }
    }
    std::sort(out.bundle.begin(), out.bundle.end());
    return out;
}

} // namespace

SingleBuyerOutcome sample_outcome(const OfferPolicy& policy, const BuyerModel& model,
                                  const BuyerType& type, CoinStream& coins) {
    if (policy.kind == OfferPolicy::Kind::menu) {
        if (model.kind != BuyerKind::correlated_matroid)
            throw std::invalid_argument("sample_outcome: menu policy for a non-menu buyer");
        if (type.type_id < 0 || type.type_id >= static_cast<int>(policy.menu.size()))
            throw std::out_of_range("sample_outcome: type id absent from menu");
        const MenuEntry& entry = policy.menu[static_cast<size_t>(type.type_id)];
        SingleBuyerOutcome out;
        out.bundle = matroid_round(entry.marginals, model.matroid, coins);
        out.payment = entry.payment;
        out.value = model.value_of(type, out.bundle);
        return out;
    }

    if (model.kind == BuyerKind::budgeted_single_item) {
        SingleBuyerOutcome out;
        const ItemOffer& offer = policy.offers.at(0);
        if (offer.is_null()) return out;
        const double p = offer.draw(coins);
        if (!std::isfinite(p) || type.values.at(0) < p) return out;
        if (p <= model.budget) {
            out.payment = p;
            out.bundle.push_back(0);
            out.value = type.values[0];
        } else {
            out.payment = model.budget;
            out.fractional_item = 0;
            if (coins.next() < model.budget / p) {
                out.bundle.push_back(0);
                out.value = type.values[0];
            }
        }
        return out;
    }

    return run_item_pricing(policy, model, type, coins);
}

} // namespace bca
