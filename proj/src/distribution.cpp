#include "bca/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bca {

Distribution Distribution::uniform(double a, double b) {
    if (!(a >= 0) || !(b > a)) throw std::invalid_argument("uniform: need 0 <= a < b");
    Distribution d;
    d.kind_ = Kind::uniform;
    d.a_ = a;
    d.b_ = b;
    d.support_min_ = a;
    d.support_max_ = b;
    return d;
}

Distribution Distribution::discrete(std::vector<std::pair<double, double>> value_prob) {
    if (value_prob.empty()) throw std::invalid_argument("discrete: empty support");
    std::sort(value_prob.begin(), value_prob.end());
    Distribution d;
    d.kind_ = Kind::discrete;
    double cum = 0;
    for (const auto& [v, p] : value_prob) {
        if (v < 0) throw std::invalid_argument("discrete: negative value");
        if (p < 0) throw std::invalid_argument("discrete: negative probability");
        cum += p;
        if (!d.values_.empty() && d.values_.back() == v)
            d.cum_.back() = cum;
        else {
            d.values_.push_back(v);
            d.cum_.push_back(cum);
        }
    }
    if (std::abs(cum - 1.0) > 1e-9)
        throw std::invalid_argument("discrete: probabilities sum to " + std::to_string(cum));
    d.cum_.back() = 1.0;
    d.support_min_ = d.values_.front();
    d.support_max_ = d.values_.back();
    return d;
}

Distribution Distribution::pwl_cdf(std::vector<std::pair<double, double>> value_cum) {
    if (value_cum.size() < 2) throw std::invalid_argument("pwl_cdf: need at least 2 knots");
    std::sort(value_cum.begin(), value_cum.end());
    if (value_cum.front().first < 0) throw std::invalid_argument("pwl_cdf: negative value");
    if (std::abs(value_cum.front().second) > 1e-9 || std::abs(value_cum.back().second - 1.0) > 1e-9)
        throw std::invalid_argument("pwl_cdf: CDF must run from 0 to 1");
    for (size_t i = 1; i < value_cum.size(); ++i)
        if (value_cum[i].second < value_cum[i - 1].second - 1e-12)
            throw std::invalid_argument("pwl_cdf: CDF must be nondecreasing");
    Distribution d;
    d.kind_ = Kind::pwl_cdf;
    d.knots_ = std::move(value_cum);
    d.knots_.front().second = 0.0;
    d.knots_.back().second = 1.0;
    d.support_min_ = d.knots_.front().first;
    d.support_max_ = d.knots_.back().first;
    return d;
}

Distribution Distribution::point_mass(double v) { return discrete({{v, 1.0}}); }

double Distribution::cdf(double v) const {
    switch (kind_) {
    case Kind::uniform:
        if (v <= a_) return 0.0;
        if (v >= b_) return 1.0;
        return (v - a_) / (b_ - a_);
    case Kind::discrete: {
        auto it = std::upper_bound(values_.begin(), values_.end(), v);
        if (it == values_.begin()) return 0.0;
        return cum_[static_cast<size_t>(it - values_.begin()) - 1];
    }
    case Kind::pwl_cdf: {
        if (v <= knots_.front().first) return v < knots_.front().first ? 0.0 : knots_.front().second;
        if (v >= knots_.back().first) return 1.0;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), v,
                                   [](double x, const auto& k) { return x < k.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        if (hi.first == lo.first) return hi.second;
        const double t = (v - lo.first) / (hi.first - lo.first);
        return lo.second + t * (hi.second - lo.second);
    }
    }
    return 0.0;
}

double Distribution::cdf_left(double v) const {
    if (kind_ == Kind::discrete) {
        auto it = std::lower_bound(values_.begin(), values_.end(), v);
        if (it == values_.begin()) return 0.0;
        return cum_[static_cast<size_t>(it - values_.begin()) - 1];
    }
    // continuous representations have no atoms except possibly pwl jumps
    if (kind_ == Kind::pwl_cdf) {
        double best = 0.0;
        for (size_t i = 0; i < knots_.size(); ++i) {
            if (knots_[i].first < v) best = knots_[i].second;
            if (knots_[i].first >= v) break;
        }
        // interpolate inside a segment
        if (v > knots_.front().first && v < knots_.back().first) {
            auto it = std::lower_bound(knots_.begin(), knots_.end(), v,
                                       [](const auto& k, double x) { return k.first < x; });
            if (it != knots_.begin() && it->first > v) {
                const auto& hi = *it;
                const auto& lo = *(it - 1);
                const double t = (v - lo.first) / (hi.first - lo.first);
                best = lo.second + t * (hi.second - lo.second);
            }
        }
        return best;
    }
    return cdf(v);
}

double Distribution::quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must be in [0, 1]");
    switch (kind_) {
    case Kind::uniform:
        return a_ + q * (b_ - a_);
    case Kind::discrete: {
        auto it = std::lower_bound(cum_.begin(), cum_.end(), q);
        if (it == cum_.end()) return values_.back();
        return values_[static_cast<size_t>(it - cum_.begin())];
    }
    case Kind::pwl_cdf: {
        if (q <= 0.0) return knots_.front().first;
        auto it = std::lower_bound(knots_.begin(), knots_.end(), q,
                                   [](const auto& k, double x) { return k.second < x; });
        if (it == knots_.end()) return knots_.back().first;
        if (it == knots_.begin()) return knots_.front().first;
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        if (hi.second == lo.second) return hi.first;
        const double t = (q - lo.second) / (hi.second - lo.second);
        return lo.first + t * (hi.first - lo.first);
    }
    }
    return 0.0;
}

double Distribution::density(double v) const {
    switch (kind_) {
    case Kind::uniform:
        return (v >= a_ && v <= b_) ? 1.0 / (b_ - a_) : 0.0;
    case Kind::pwl_cdf: {
        if (v < knots_.front().first || v > knots_.back().first) return 0.0;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), v,
                                   [](double x, const auto& k) { return x < k.first; });
        if (it == knots_.begin() || it == knots_.end()) return 0.0;
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        if (hi.first == lo.first) return 0.0;
        return (hi.second - lo.second) / (hi.first - lo.first);
    }
    case Kind::discrete:
        throw std::invalid_argument("density: discrete distribution has no density");
    }
    return 0.0;
}

double Distribution::min_positive() const {
    switch (kind_) {
    case Kind::uniform:
        return a_ > 0 ? a_ : 0.0;
    case Kind::discrete:
        for (double v : values_)
            if (v > 0) return v;
        return 0.0;
    case Kind::pwl_cdf:
        return support_min_ > 0 ? support_min_ : 0.0;
    }
    return 0.0;
}

ModifiedCdf::ModifiedCdf(Distribution base, double budget)
    : base_(std::move(base)), budget_(budget) {
    if (!(budget > 0)) throw std::invalid_argument("modified cdf: budget must be positive");
}

double ModifiedCdf::cdf(double v) const {
    if (!std::isfinite(budget_) || v <= budget_) return base_.cdf(v);
    return 1.0 - (1.0 - base_.cdf(v)) * budget_ / v;
}

double ModifiedCdf::sale_prob(double price) const {
    if (price <= 0) return 1.0;
    const double tail = 1.0 - base_.cdf_left(price);
    if (!std::isfinite(budget_) || price <= budget_) return tail;
    return tail * budget_ / price;
}

double ModifiedCdf::quantile(double q) const {
    if (!std::isfinite(budget_)) return base_.quantile(q);
    const double vq = base_.quantile(q);
    if (vq <= budget_) return vq; // Fbar == F on [0, B]
    // invert the budget branch by bisection; Fbar is nondecreasing there
    double lo = budget_;
    double hi = std::max(base_.support_max(), budget_);
    if (cdf(hi) < q) return hi;
    for (int iter = 0; iter < 200 && (hi - lo) > 1e-10 * std::max(1.0, hi); ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) >= q)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

bool check_regular(const Distribution& d, int grid_size) {
    if (d.is_discrete())
        throw std::invalid_argument("regularity check requires density");
    if (grid_size < 3) throw std::invalid_argument("check_regular: grid too small");
    const double lo = d.support_min();
    const double hi = d.support_max();
    const double step = (hi - lo) / grid_size;
    double prev_phi = -kInf;
    for (int i = 0; i < grid_size; ++i) {
        const double p = lo + i * step;
        const double f = (d.cdf(p + step) - d.cdf(p)) / step; // forward secant density
        const double tail = 1.0 - d.cdf(p);
        double phi;
        if (f > 1e-300)
            phi = p - tail / f;
        else if (tail <= 1e-12)
            phi = p; // no mass above: virtual value equals the price
        else
            return false; // zero density below the top of the support
        if (phi < prev_phi - 1e-9) return false;
        prev_phi = phi;
    }
    return true;
}

RevenueCurve::RevenueCurve(std::vector<CurvePoint> samples, std::vector<CurvePoint> hull,
                           double epsilon)
    : samples_(std::move(samples)), hull_(std::move(hull)), epsilon_(epsilon) {
    for (const CurvePoint& p : hull_) {
        if (p.revenue > peak_value_) {
            peak_value_ = p.revenue;
            peak_q_ = p.q;
        }
    }
}

double RevenueCurve::value(double q) const {
    if (hull_.empty()) return 0.0;
    if (q <= hull_.front().q) return hull_.front().revenue;
    if (q >= hull_.back().q) return hull_.back().revenue;
    auto it = std::lower_bound(hull_.begin(), hull_.end(), q,
                               [](const CurvePoint& p, double v) { return p.q < v; });
    const CurvePoint& b = *it;
    const CurvePoint& a = *(it - 1);
    if (b.q == a.q) return std::max(a.revenue, b.revenue);
    const double t = (q - a.q) / (b.q - a.q);
    return a.revenue + t * (b.revenue - a.revenue);
}

RevenueCurve::Split RevenueCurve::split(double q) const {
    Split s;
    if (hull_.empty()) return s;
    auto it = std::lower_bound(hull_.begin(), hull_.end(), q,
                               [](const CurvePoint& p, double v) { return p.q < v; });
    if (it == hull_.end()) it = hull_.end() - 1;
    if (std::abs(it->q - q) <= 1e-12 || it == hull_.begin()) {
        s.lo = s.hi = *it;
        s.theta = 1.0;
        s.at_vertex = true;
        return s;
    }
    s.hi = *it;
    s.lo = *(it - 1);
    if (std::abs(s.lo.q - q) <= 1e-12) {
        s.hi = s.lo;
        s.theta = 1.0;
        s.at_vertex = true;
        return s;
    }
    s.theta = (s.hi.q - q) / (s.hi.q - s.lo.q);
    s.at_vertex = false;
    return s;
}

PiecewiseLinear RevenueCurve::ascending_hull() const {
    std::vector<XY> pts;
    pts.push_back({hull_.front().q, hull_.front().revenue});
    for (size_t i = 1; i < hull_.size(); ++i) {
        if (hull_[i].revenue < hull_[i - 1].revenue) break; // past the peak
        pts.push_back({hull_[i].q, hull_[i].revenue});
    }
    if (pts.size() == 1) pts.push_back(pts.front());
    return PiecewiseLinear(std::move(pts));
}

RevenueCurve revenue_curve(const Distribution& d, double budget, const CurveOptions& opts) {
    if (opts.epsilon <= 0) throw std::invalid_argument("revenue_curve: epsilon must be positive");
    const double vmax = d.support_max();
    if (!(vmax > 0)) throw std::invalid_argument("revenue_curve: degenerate support");
    double vmin = d.min_positive();
    vmin = std::max(vmin, vmax * opts.grid_floor);
    const double ratio = vmax / vmin;
    const int ell = std::max(1, static_cast<int>(std::floor(std::log(ratio) / std::log1p(opts.epsilon))));

    const ModifiedCdf fbar(d, budget);
    auto by_q_rev_price = [](const CurvePoint& a, const CurvePoint& b) {
        if (a.q != b.q) return a.q < b.q;
        if (a.revenue != b.revenue) return a.revenue < b.revenue;
        return a.price < b.price;
    };
    std::vector<CurvePoint> raw;
    raw.reserve(static_cast<size_t>(ell) + 1);
    for (int r = 0; r <= ell; ++r) {
        const double price = vmin * std::pow(1.0 + opts.epsilon, ell - r);
        const double q = std::clamp(fbar.sale_prob(price), 0.0, 1.0);
        raw.push_back({q, price * q, price});
    }
    std::sort(raw.begin(), raw.end(), by_q_rev_price);
    // duplicate q keeps the best price
    std::vector<CurvePoint> samples;
    for (const CurvePoint& p : raw) {
        if (!samples.empty() && samples.back().q == p.q)
            samples.back() = p;
        else
            samples.push_back(p);
    }

    // hull over samples plus the anchors (0,0) = null offer and (1,0) = free
    std::vector<CurvePoint> pool = samples;
    pool.push_back({0.0, 0.0, kInf});
    pool.push_back({1.0, 0.0, 0.0});
    std::sort(pool.begin(), pool.end(), by_q_rev_price);
    std::vector<CurvePoint> dedup;
    for (const CurvePoint& p : pool) {
        if (!dedup.empty() && dedup.back().q == p.q)
            dedup.back() = p;
        else
            dedup.push_back(p);
    }
    auto cross = [](const CurvePoint& o, const CurvePoint& a, const CurvePoint& b) {
        return (a.q - o.q) * (b.revenue - o.revenue) - (a.revenue - o.revenue) * (b.q - o.q);
    };
    std::vector<CurvePoint> hull;
    for (const CurvePoint& p : dedup) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) >= 0)
            hull.pop_back();
        hull.push_back(p);
    }
    return RevenueCurve(std::move(samples), std::move(hull), opts.epsilon);
}

} // namespace bca
