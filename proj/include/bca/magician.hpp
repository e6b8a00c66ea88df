#pragma once
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace bca {

struct MagicianConfig {
    double gamma = 0.5; // target ex-ante open probability, in [0, 1]
    int wands = 1;      // capacity k >= 1
};

// Raised when the DP would need a threshold beyond wands-1, i.e. gamma is too
// large for the presented box sequence. Callers treat this as a hard failure:
// rounding mechanisms must never over-allocate.
class WandBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Open rule for one box: open always below theta, never above, and with
// probability s_at_theta when the realized broken count equals theta.
struct BoxPolicy {
    int theta = 0;
    double s_at_theta = 1.0;

    double open_prob(int broken) const {
        if (broken < theta) return 1.0;
        if (broken > theta) return 0.0;
        return s_at_theta;
    }
};

bool realize_open(const BoxPolicy& policy, int realized_broken, double coin);

// gamma-conservative magician. Maintains the ex-ante CDF of the broken-wand
// count and adaptively computes the threshold sequence.
class Magician {
public:
    explicit Magician(MagicianConfig cfg);

    // Computes this box's policy from the current CDF and advances the CDF,
    // treating p as the (upper bound on the) break probability given open.
    BoxPolicy offer_box(double p);

    int round() const { return round_; }
    int last_theta() const { return last_theta_; }
    double cumulative_p() const { return cumulative_p_; }
    const std::vector<double>& cdf() const { return cdf_; }
    const MagicianConfig& config() const { return cfg_; }

private:
    MagicianConfig cfg_;
    std::vector<double> cdf_; // Phi_i(w) for w in 0..wands
    int round_ = 1;
    int last_theta_ = -1;
    double cumulative_p_ = 0.0;
};

// Largest gamma certified safe for k wands: 1 - 1/sqrt(k+3).
double gamma_lower_bound(int k);

// No policy can guarantee opening probability above 1 - k^k/(e^k k!).
double hardness_upper_bound(int k);

// Sand displacement process on a growable tape; produces the same thresholds
// and CDFs as the magician DP but without a wand cap.
class SandProcess {
public:
    explicit SandProcess(double gamma);

    int step(double p); // one round; returns theta_i

    double cdf_at(int w) const; // 1 beyond the stored tape
    const std::vector<double>& cdf() const { return cdf_; }
    int barrier() const { return barrier_; } // theta of last round + 1
    int round() const { return round_; }
    double total_mass() const;

private:
    double gamma_;
    std::vector<double> cdf_;
    int barrier_ = 0;
    int round_ = 1;
};

struct SandRun {
    std::vector<int> thresholds;           // theta_i per round
    std::vector<std::vector<double>> cdfs; // Phi_{i+1} after each round
};

SandRun sand_run(double gamma, std::span<const double> probs);

// Max threshold over the run; <= k-1 whenever sum(probs) <= k and
// gamma <= gamma_lower_bound(k).
int max_threshold(double gamma, std::span<const double> probs);

// Simulates the adversarial family: n boxes, each holding a $1 prize
// independently with probability k/n. No strategy can collect more than
// min(number of prizes, k), so the per-box open guarantee is capped by
// E[min(Binomial(n, k/n), k)] / k.
struct HardnessResult {
    double empirical_mean = 0; // Monte Carlo E[min(sum X, k)]
    double exact_mean = 0;     // exact E[min(Binomial(n, k/n), k)]
    double asymptotic_cap = 0; // hardness_upper_bound(k) * k
};
HardnessResult hardness_experiment(int k, int n, std::int64_t trials, std::uint64_t seed);

} // namespace bca
