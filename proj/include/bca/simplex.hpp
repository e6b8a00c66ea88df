#pragma once
#include <vector>

namespace bca {

enum class Relation { le, ge, eq };
enum class LpStatus { optimal, infeasible, unbounded };

// Dense LP in maximization form. Variable bounds are handled natively by the
// solver (no bound rows); lower bounds must be finite, uppers may be +inf.
struct LinearProgram {
    std::vector<double> objective;
    struct Row {
        std::vector<double> coeffs; // dense, sized num_vars
        Relation rel = Relation::le;
        double rhs = 0;
    };
    std::vector<Row> rows;
    std::vector<double> lower;
    std::vector<double> upper;

    int add_variable(double obj, double lo, double hi);
    // coeffs as (var index, coefficient) pairs; densified internally
    void add_row(const std::vector<std::pair<int, double>>& entries, Relation rel, double rhs);
    int num_vars() const { return static_cast<int>(objective.size()); }
};

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> values;
    double objective_value = 0.0;
};

// Two-phase primal simplex with bounded variables, Dantzig pricing and a
// Bland fallback on degenerate stalls. Deterministic given the input.
LpSolution solve_lp(const LinearProgram& lp);

} // namespace bca
