#pragma once
#include "bca/concave.hpp"

#include <limits>
#include <utility>
#include <vector>

namespace bca {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Valuation distribution over nonnegative currency values: discrete atoms,
// piecewise-linear CDF, or uniform(a, b). CDFs follow the right-continuous
// convention; quantile(q) = inf{v : F(v) >= q}.
class Distribution {
public:
    enum class Kind { discrete, pwl_cdf, uniform };

    static Distribution uniform(double a, double b);
    static Distribution discrete(std::vector<std::pair<double, double>> value_prob);
    static Distribution pwl_cdf(std::vector<std::pair<double, double>> value_cum);
    static Distribution point_mass(double v);

    double cdf(double v) const;
    double cdf_left(double v) const; // F(v-) = Pr[V < v]
    double quantile(double q) const;
    double sample(double coin) const { return quantile(coin); }
    double density(double v) const; // continuous kinds only

    Kind kind() const { return kind_; }
    bool is_discrete() const { return kind_ == Kind::discrete; }
    double support_min() const { return support_min_; }
    double support_max() const { return support_max_; }
    double min_positive() const; // smallest positive support value

private:
    Kind kind_ = Kind::uniform;
    double a_ = 0, b_ = 1;                  // uniform
    std::vector<double> values_;            // discrete: sorted atoms
    std::vector<double> cum_;               // discrete: cumulative probability
    std::vector<std::pair<double, double>> knots_; // pwl: (value, F)
    double support_min_ = 0, support_max_ = 1;
};

// Budget-truncated sale CDF: Fbar(v) = F(v) for v <= B and
// 1 - (1 - F(v)) * B / v for v >= B. 1 - Fbar(p) is the probability the item
// is allocated at price p when the buyer may pay a fraction of the price for
// a proportional chance of receiving it.
class ModifiedCdf {
public:
    ModifiedCdf(Distribution base, double budget);

    double cdf(double v) const;
    double quantile(double q) const; // numeric inversion above the budget

    // Probability the item is allocated at a posted price, with ties broken in
    // the seller's favor: Pr[v >= p], scaled by B/p above the budget.
    double sale_prob(double price) const;

    const Distribution& base() const { return base_; }
    double budget() const { return budget_; }
    double support_max() const { return base_.support_max(); }

private:
    Distribution base_;
    double budget_;
};

// True iff the finite-difference virtual value p - (1 - F(p)) / f(p) is
// nondecreasing across the grid. Continuous representations only.
bool check_regular(const Distribution& d, int grid_size);

struct CurvePoint {
    double q = 0;       // sale probability
    double revenue = 0; // q * price
    double price = 0;
};

struct CurveOptions {
    double epsilon = 0.01;    // geometric price-grid ratio
    double grid_floor = 1e-4; // lowest grid price relative to the max value
};

// Revenue curve R(q) = q * Fbar^{-1}(1 - q) sampled on a geometric price grid
// together with its piecewise-linear concave upper hull through (0,0), (1,0).
class RevenueCurve {
public:
    RevenueCurve() = default;
    RevenueCurve(std::vector<CurvePoint> samples, std::vector<CurvePoint> hull, double epsilon);

    double value(double q) const; // hull evaluation
    double peak_q() const { return peak_q_; }
    double peak_value() const { return peak_value_; }

    struct Split {
        CurvePoint lo, hi; // hull vertices with lo.q <= q <= hi.q
        double theta = 1;  // q = theta * lo.q + (1 - theta) * hi.q
        bool at_vertex = false;
    };
    Split split(double q) const;

    const std::vector<CurvePoint>& samples() const { return samples_; }
    const std::vector<CurvePoint>& hull() const { return hull_; }
    double epsilon() const { return epsilon_; }

    // hull restricted to its ascending part, as breakpoints for waterfill/LP
    PiecewiseLinear ascending_hull() const;

private:
    std::vector<CurvePoint> samples_;
    std::vector<CurvePoint> hull_;
    double epsilon_ = 0;
    double peak_q_ = 0, peak_value_ = 0;
};

RevenueCurve revenue_curve(const Distribution& d, double budget, const CurveOptions& opts = {});

} // namespace bca
