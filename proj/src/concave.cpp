#include "bca/concave.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bca {

PiecewiseLinear::PiecewiseLinear(std::vector<XY> pts) : pts_(std::move(pts)) {
    if (pts_.empty()) throw std::invalid_argument("piecewise linear: no points");
    for (size_t i = 1; i < pts_.size(); ++i)
        if (pts_[i].x < pts_[i - 1].x)
            throw std::invalid_argument("piecewise linear: x must be nondecreasing");
}

double PiecewiseLinear::operator()(double x) const {
    if (x <= pts_.front().x) return pts_.front().y;
    if (x >= pts_.back().x) return pts_.back().y;
    auto it = std::lower_bound(pts_.begin(), pts_.end(), x,
                               [](const XY& p, double v) { return p.x < v; });
    const XY& b = *it;
    const XY& a = *(it - 1);
    if (b.x == a.x) return std::max(a.y, b.y);
    const double t = (x - a.x) / (b.x - a.x);
    return a.y + t * (b.y - a.y);
}

bool PiecewiseLinear::is_concave(double tol) const {
    double prev_slope = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < pts_.size(); ++i) {
        const double dx = pts_[i].x - pts_[i - 1].x;
        if (dx <= 0) continue;
        const double slope = (pts_[i].y - pts_[i - 1].y) / dx;
        if (slope > prev_slope + tol) return false;
        prev_slope = slope;
    }
    return true;
}

namespace {

double cross(const XY& o, const XY& a, const XY& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

} // namespace

PiecewiseLinear upper_hull(std::span<const XY> points) {
    if (points.size() < 2) throw std::invalid_argument("upper_hull: need at least 2 points");
    std::vector<XY> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), [](const XY& a, const XY& b) {
        if (a.x != b.x) return a.x < b.x;
        return a.y < b.y;
    });
    // duplicate x keeps the max y
    std::vector<XY> uniq;
    uniq.reserve(pts.size());
    for (const XY& p : pts) {
        if (!uniq.empty() && uniq.back().x == p.x)
            uniq.back().y = p.y; // sorted ascending: last wins with max y
        else
            uniq.push_back(p);
    }
    if (uniq.size() == 1) throw std::invalid_argument("upper_hull: degenerate input (single x)");

    std::vector<XY> hull;
    hull.reserve(uniq.size());
    for (const XY& p : uniq) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) >= 0)
            hull.pop_back();
        hull.push_back(p);
    }
    return PiecewiseLinear(std::move(hull));
}

WaterfillResult greedy_waterfill(std::span<const PiecewiseLinear> curves,
                                 std::span<const double> caps,
                                 double total_cap) {
    if (curves.size() != caps.size())
        throw std::invalid_argument("greedy_waterfill: curves/caps size mismatch");
    if (total_cap < 0) throw std::invalid_argument("greedy_waterfill: negative total_cap");

    struct Segment {
        double slope;
        double width;
        size_t curve;
        size_t order; // position within its curve, for deterministic ties
    };
    std::vector<Segment> segments;
    for (size_t c = 0; c < curves.size(); ++c) {
        const auto& pts = curves[c].points();
        if (std::abs(curves[c](0.0)) > 1e-9)
            throw std::invalid_argument("greedy_waterfill: curve " + std::to_string(c) +
                                        " has curve(0) != 0");
        if (!curves[c].is_concave(1e-9))
            throw std::invalid_argument("greedy_waterfill: curve " + std::to_string(c) +
                                        " is not concave");
        const double cap = std::min(caps[c], curves[c].x_max());
        if (cap < -1e-12) throw std::invalid_argument("greedy_waterfill: negative cap");
        double used = 0;
        size_t order = 0;
        for (size_t i = 1; i < pts.size() && used < cap; ++i) {
            const double dx = pts[i].x - pts[i - 1].x;
            if (dx <= 0) continue;
            const double slope = (pts[i].y - pts[i - 1].y) / dx;
            const double width = std::min(dx, cap - used);
            if (slope > 0) segments.push_back({slope, width, c, order++});
            used += width;
        }
    }
    std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
        if (a.slope != b.slope) return a.slope > b.slope;
        if (a.curve != b.curve) return a.curve < b.curve;
        return a.order < b.order;
    });

    WaterfillResult result;
    result.q.assign(curves.size(), 0.0);
    double remaining = total_cap;
    for (const Segment& s : segments) {
        if (remaining <= 0) break;
        const double take = std::min(s.width, remaining);
        result.q[s.curve] += take;
        result.value += s.slope * take;
        remaining -= take;
    }
    return result;
}

} // namespace bca
