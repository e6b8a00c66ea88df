#include "bca/magician.hpp"

#include "bca/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bca {

namespace {

// Comparison slack for Phi(w) >= gamma. Exact instances can land on the
// boundary (e.g. gamma = gamma_k with sum p = k drives Phi(theta) to exactly
// gamma), where accumulated rounding must not push the threshold up a slot.
constexpr double kThetaTol = 1e-12;

struct Policy {
    int theta;
    double s;
};

// theta = min{w : Phi(w) >= gamma}, s per the conditional-open formula.
// cdf_at(w) must return the CDF with cdf_at(-1) == 0 and saturate at 1.
template <typename CdfAt>
Policy compute_policy(const CdfAt& cdf_at, double gamma) {
    int theta = 0;
    while (cdf_at(theta) < gamma - kThetaTol) ++theta;
    const double lo = theta > 0 ? cdf_at(theta - 1) : 0.0;
    const double hi = cdf_at(theta);
    const double denom = hi - lo;
    double s = 1.0; // zero-mass atom at theta: the open decision is arbitrary
    if (denom > 0.0) s = std::clamp((gamma - lo) / denom, 0.0, 1.0);
    return {theta, s};
}

// Phi'(w) = s^w * p * Phi(w-1) + (1 - s^w * p) * Phi(w), applied in place
// from the top down so Phi(w-1) reads the pre-update value.
void apply_update(std::vector<double>& cdf, const Policy& pol, double p) {
    for (int w = std::min<int>(pol.theta, static_cast<int>(cdf.size()) - 1); w >= 0; --w) {
        const double below = w > 0 ? cdf[w - 1] : 0.0;
        const double open = w < pol.theta ? 1.0 : pol.s;
        cdf[w] = open * p * below + (1.0 - open * p) * cdf[w];
    }
}

} // namespace

bool realize_open(const BoxPolicy& policy, int realized_broken, double coin) {
    if (realized_broken < 0) throw std::invalid_argument("realized_broken must be >= 0");
    if (realized_broken < policy.theta) return true;
    if (realized_broken > policy.theta) return false;
    return coin < policy.s_at_theta;
}

Magician::Magician(MagicianConfig cfg) : cfg_(cfg) {
    if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0))
        throw std::invalid_argument("magician: gamma must be in [0, 1]");
    if (cfg.wands < 1) throw std::invalid_argument("magician: wands must be >= 1");
    cdf_.assign(static_cast<size_t>(cfg.wands) + 1, 1.0);
}

BoxPolicy Magician::offer_box(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("offer_box: p must be in [0, 1]");
    auto cdf_at = [this](int w) {
        if (w < 0) return 0.0;
        if (w >= static_cast<int>(cdf_.size())) return 1.0;
        return cdf_[static_cast<size_t>(w)];
    };
    const Policy pol = compute_policy(cdf_at, cfg_.gamma);
    if (pol.theta > cfg_.wands - 1) {
        throw WandBudgetError("wand budget exceeded: round " + std::to_string(round_) +
                              " needs threshold " + std::to_string(pol.theta) + " with " +
                              std::to_string(cfg_.wands) + " wands");
    }
    apply_update(cdf_, pol, p);
    ++round_;
    last_theta_ = pol.theta;
    cumulative_p_ += p;
    return BoxPolicy{pol.theta, pol.s};
}

double gamma_lower_bound(int k) {
    if (k < 1) throw std::domain_error("gamma_lower_bound: k must be >= 1");
    return 1.0 - 1.0 / std::sqrt(static_cast<double>(k) + 3.0);
}

double hardness_upper_bound(int k) {
    if (k < 1) throw std::domain_error("hardness_upper_bound: k must be >= 1");
    const double kd = static_cast<double>(k);
    // k^k / (e^k k!) via logs to dodge overflow
    const double log_ratio = kd * std::log(kd) - kd - std::lgamma(kd + 1.0);
    return 1.0 - std::exp(log_ratio);
}

SandProcess::SandProcess(double gamma) : gamma_(gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("sand process: gamma must be in [0, 1]");
    cdf_.assign(1, 1.0);
}

double SandProcess::cdf_at(int w) const {
    if (w < 0) return 0.0;
    if (w >= static_cast<int>(cdf_.size())) return 1.0;
    return cdf_[static_cast<size_t>(w)];
}

int SandProcess::step(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sand step: p must be in [0, 1]");
    auto at = [this](int w) { return cdf_at(w); };
    const Policy pol = compute_policy(at, gamma_);
    // keep positions 0..theta+1 explicit; everything beyond holds CDF 1
    if (static_cast<int>(cdf_.size()) < pol.theta + 2)
        cdf_.resize(static_cast<size_t>(pol.theta) + 2, 1.0);
    apply_update(cdf_, pol, p);
    ++round_;
    barrier_ = pol.theta + 1;
    return pol.theta;
}

double SandProcess::total_mass() const { return cdf_.back(); }

SandRun sand_run(double gamma, std::span<const double> probs) {
    SandProcess sand(gamma);
    SandRun run;
    run.thresholds.reserve(probs.size());
    run.cdfs.reserve(probs.size());
    for (double p : probs) {
        run.thresholds.push_back(sand.step(p));
        run.cdfs.push_back(sand.cdf());
    }
    return run;
}

int max_threshold(double gamma, std::span<const double> probs) {
    SandProcess sand(gamma);
    int max_theta = 0;
    for (double p : probs) max_theta = std::max(max_theta, sand.step(p));
    return max_theta;
}

HardnessResult hardness_experiment(int k, int n, std::int64_t trials, std::uint64_t seed) {
    if (k < 1 || n < k) throw std::invalid_argument("hardness_experiment: need n >= k >= 1");
    if (trials < 1) throw std::invalid_argument("hardness_experiment: trials must be >= 1");
    const double p = static_cast<double>(k) / n;

    // Binomial(n, p) pmf by the stable ratio recurrence; truncated once the
    // CDF is within 1e-15 of one.
    std::vector<double> cdf;
    double pmf = std::pow(1.0 - p, n);
    double cum = pmf;
    cdf.push_back(cum);
    for (int i = 0; i < n && cum < 1.0 - 1e-15; ++i) {
        pmf *= (static_cast<double>(n - i) / (i + 1)) * (p / (1.0 - p));
        cum += pmf;
        cdf.push_back(std::min(cum, 1.0));
    }

    HardnessResult result;
    double exact = 0;
    double prev = 0;
    for (size_t count = 0; count < cdf.size(); ++count) {
        const double mass = cdf[count] - prev;
        prev = cdf[count];
        exact += mass * std::min<double>(static_cast<double>(count), k);
    }
    exact += (1.0 - prev) * k; // truncated tail is capped at k anyway
    result.exact_mean = exact;
    result.asymptotic_cap = hardness_upper_bound(k) * k;

    // inverse-transform sampling of the prize count
    CoinStream coins(seed, 0, 0x4a2db1u);
    double total = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
        const double u = coins.next();
        const size_t count =
            static_cast<size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        total += std::min<double>(static_cast<double>(count), k);
    }
    result.empirical_mean = total / static_cast<double>(trials);
    return result;
}

} // namespace bca
