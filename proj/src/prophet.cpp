#include "bca/prophet.hpp"

#include "bca/magician.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace bca {

ProphetThreshold find_threshold(const ProphetInstance& instance) {
    if (instance.k < 1) throw std::invalid_argument("find_threshold: k must be >= 1");
    const auto& dists = instance.distributions;
    const double k = static_cast<double>(instance.k);

    auto exceed_sum = [&dists](double t) {
        double total = 0;
        for (const Distribution& d : dists) total += 1.0 - d.cdf(t);
        return total;
    };

    double hi = 0;
    for (const Distribution& d : dists) hi = std::max(hi, d.support_max());

    ProphetThreshold result;
    if (exceed_sum(0.0) <= k) {
        result.value = 0.0; // degenerate: even T = 0 clears at most k in expectation
    } else {
        // exceed_sum is nonincreasing and right-continuous; find
        // inf{T : exceed_sum(T) <= k}
        double lo = 0.0;
        double up = hi;
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + up);
            if (exceed_sum(mid) <= k)
                up = mid;
            else
                lo = mid;
        }
        result.value = up;
    }

    // split atoms at T so the expected exceedance count equals k exactly
    const double strict = exceed_sum(result.value);
    double atom_mass = 0;
    std::vector<double> atoms(dists.size(), 0.0);
    for (size_t i = 0; i < dists.size(); ++i) {
        atoms[i] = std::max(0.0, dists[i].cdf(result.value) - dists[i].cdf_left(result.value));
        atom_mass += atoms[i];
    }
    const double deficit = k - strict;
    result.tie_split = (atom_mass > 1e-15 && deficit > 0) ? std::min(1.0, deficit / atom_mass) : 0.0;

    result.box_probs.resize(dists.size());
    for (size_t i = 0; i < dists.size(); ++i) {
        const double p = (1.0 - dists[i].cdf(result.value)) + result.tie_split * atoms[i];
        result.box_probs[i] = std::clamp(p, 0.0, 1.0);
    }
    return result;
}

GamblerRun run_gambler(const ProphetInstance& instance, const ProphetThreshold& threshold,
                       std::span<const double> draws, CoinStream& coins) {
    if (draws.size() != instance.distributions.size())
        throw std::invalid_argument("run_gambler: one draw per distribution required");
    Magician magician({gamma_lower_bound(instance.k), instance.k});
    GamblerRun run;
    run.openable.assign(draws.size(), 0);
    int broken = 0;
    for (size_t i = 0; i < draws.size(); ++i) {
        const BoxPolicy policy = magician.offer_box(threshold.box_probs[i]);
        const bool open = realize_open(policy, broken, coins.next());
        run.openable[i] = open ? 1 : 0;
        bool exceeds = draws[i] > threshold.value;
        if (!exceeds && draws[i] == threshold.value && threshold.tie_split > 0)
            exceeds = coins.next() < threshold.tie_split;
        if (open && exceeds) {
            run.selected.push_back(static_cast<int>(i));
            run.total += draws[i];
            ++broken;
        }
    }
    return run;
}

double prophet_payoff(std::span<const double> draws, int k) {
    if (k <= 0) return 0;
    std::vector<double> sorted(draws.begin(), draws.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double total = 0;
    const size_t take = std::min(sorted.size(), static_cast<size_t>(k));
    for (size_t i = 0; i < take; ++i) total += sorted[i];
    return total;
}

} // namespace bca
