#pragma once
#include <span>
#include <vector>

namespace bca {

// Uniform or partition matroid over items 0..ground-1. These are the two
// families with closed-form polytope descriptions; together with the [0,1]
// box their constraints() exactly describe the matroid polytope.
struct Matroid {
    enum class Kind { uniform, partition };

    Kind kind = Kind::uniform;
    int ground = 0;
    int rank = 0;                 // uniform
    std::vector<int> part_of;     // partition: item -> part index
    std::vector<int> capacities;  // partition: per part

    static Matroid uniform_matroid(int ground, int rank);
    static Matroid partition_matroid(int ground, const std::vector<std::vector<int>>& parts,
                                     const std::vector<int>& caps);

    struct Constraint {
        std::vector<int> items;
        int bound;
    };
    std::vector<Constraint> constraints() const;

    bool in_polytope(std::span<const double> marginals, double tol = 1e-9) const;
    int rank_of(std::span<const int> subset) const;
};

} // namespace bca
