#pragma once
#include "bca/distribution.hpp"
#include "bca/random.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace bca {

struct ProphetInstance {
    std::vector<Distribution> distributions;
    int k = 1;
};

struct ProphetThreshold {
    double value = 0;     // T with sum_i Pr[X_i > T] = k, up to atom splits
    double tie_split = 0; // probability an atom exactly at T counts as exceeding
    std::vector<double> box_probs; // per index; sums to min(k, sum Pr[X_i > 0-])
};

ProphetThreshold find_threshold(const ProphetInstance& instance);

struct GamblerRun {
    std::vector<int> selected;
    double total = 0;
    std::vector<uint8_t> openable; // magician open decision per arrival
};

// gamma_k-conservative magician with k wands drives the selection: a draw is
// taken when the magician opens its box and the draw clears the threshold.
GamblerRun run_gambler(const ProphetInstance& instance, const ProphetThreshold& threshold,
                       std::span<const double> draws, CoinStream& coins);

// Sum of the k largest draws (all of them if fewer).
double prophet_payoff(std::span<const double> draws, int k);

} // namespace bca
