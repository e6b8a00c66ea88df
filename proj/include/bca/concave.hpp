#pragma once
#include <span>
#include <vector>

namespace bca {

struct XY {
    double x = 0;
    double y = 0;
};

// Piecewise-linear function over breakpoints with nondecreasing x.
// Evaluation clamps to the endpoint values outside the breakpoint range.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    explicit PiecewiseLinear(std::vector<XY> pts);

    double operator()(double x) const;
    const std::vector<XY>& points() const { return pts_; }
    double x_min() const { return pts_.front().x; }
    double x_max() const { return pts_.back().x; }
    bool is_concave(double tol = 1e-9) const;

private:
    std::vector<XY> pts_;
};

// Upper concave envelope via a monotone-chain sweep. Input order is
// irrelevant; duplicate x keeps the max y. Needs at least 2 points.
PiecewiseLinear upper_hull(std::span<const XY> points);

struct WaterfillResult {
    std::vector<double> q;
    double value = 0.0;
};

// Maximize sum_j curve_j(q_j) subject to q_j <= caps_j and sum q_j <= total_cap
// by consuming segments in globally nonincreasing slope order, never
// allocating on nonpositive slopes. Exact for piecewise-linear concave input;
// curves must satisfy curve(0) = 0.
WaterfillResult greedy_waterfill(std::span<const PiecewiseLinear> curves,
                                 std::span<const double> caps,
                                 double total_cap);

} // namespace bca
