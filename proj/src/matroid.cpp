#include "bca/matroid.hpp"

#include <algorithm>
#include <stdexcept>

namespace bca {

Matroid Matroid::uniform_matroid(int ground, int rank) {
    if (ground < 0 || rank < 0) throw std::invalid_argument("uniform matroid: negative size");
    Matroid m;
    m.kind = Kind::uniform;
    m.ground = ground;
    m.rank = rank;
    return m;
}

Matroid Matroid::partition_matroid(int ground, const std::vector<std::vector<int>>& parts,
                                   const std::vector<int>& caps) {
    if (parts.size() != caps.size())
        throw std::invalid_argument("partition matroid: parts/capacities size mismatch");
    Matroid m;
    m.kind = Kind::partition;
    m.ground = ground;
    m.part_of.assign(ground, -1);
    m.capacities = caps;
    for (size_t p = 0; p < parts.size(); ++p) {
        if (caps[p] < 0) throw std::invalid_argument("partition matroid: negative capacity");
        for (int item : parts[p]) {
            if (item < 0 || item >= ground)
                throw std::invalid_argument("partition matroid: item out of range");
            if (m.part_of[item] != -1)
                throw std::invalid_argument("partition matroid: item in two parts");
            m.part_of[item] = p;
        }
    }
    for (int item = 0; item < ground; ++item)
        if (m.part_of[item] == -1)
            throw std::invalid_argument("partition matroid: item not covered by any part");
    return m;
}

std::vector<Matroid::Constraint> Matroid::constraints() const {
    std::vector<Constraint> out;
    if (kind == Kind::uniform) {
        Constraint c;
        c.items.resize(ground);
        for (int j = 0; j < ground; ++j) c.items[j] = j;
        c.bound = rank;
        out.push_back(std::move(c));
    } else {
        out.resize(capacities.size());
        for (size_t p = 0; p < capacities.size(); ++p) out[p].bound = capacities[p];
        for (int j = 0; j < ground; ++j) out[static_cast<size_t>(part_of[j])].items.push_back(j);
    }
    return out;
}

bool Matroid::in_polytope(std::span<const double> marginals, double tol) const {
    if (static_cast<int>(marginals.size()) != ground) return false;
    for (double x : marginals)
        if (x < -tol || x > 1.0 + tol) return false;
    for (const Constraint& c : constraints()) {
        double sum = 0;
        for (int j : c.items) sum += marginals[static_cast<size_t>(j)];
        if (sum > c.bound + tol) return false;
    }
    return true;
}

int Matroid::rank_of(std::span<const int> subset) const {
    if (kind == Kind::uniform) return std::min<int>(rank, static_cast<int>(subset.size()));
    std::vector<int> used(capacities.size(), 0);
    int total = 0;
    for (int j : subset) {
        const int p = part_of[static_cast<size_t>(j)];
        if (used[p] < capacities[p]) {
            ++used[p];
            ++total;
        }
    }
    return total;
}

} // namespace bca
