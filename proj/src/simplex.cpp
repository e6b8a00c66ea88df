#include "bca/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bca {

namespace {
constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr double kRatioTie = 1e-12;
constexpr double kInfVal = std::numeric_limits<double>::infinity();
} // namespace

int LinearProgram::add_variable(double obj, double lo, double hi) {
    objective.push_back(obj);
    lower.push_back(lo);
    upper.push_back(hi);
    for (Row& row : rows) row.coeffs.push_back(0.0);
    return static_cast<int>(objective.size()) - 1;
}

void LinearProgram::add_row(const std::vector<std::pair<int, double>>& entries, Relation rel,
                            double rhs) {
    Row row;
    row.coeffs.assign(objective.size(), 0.0);
    for (const auto& [idx, coef] : entries) {
        if (idx < 0 || idx >= num_vars()) throw std::invalid_argument("add_row: bad index");
        row.coeffs[static_cast<size_t>(idx)] += coef;
    }
    row.rel = rel;
    row.rhs = rhs;
    rows.push_back(std::move(row));
}

namespace {

enum class VarState : unsigned char { at_lower, at_upper, basic };

class Tableau {
public:
    explicit Tableau(const LinearProgram& lp) : lp_(lp), n_(lp.num_vars()) {
        validate();
        build();
    }

    LpSolution run() {
        if (need_phase1_) {
            set_phase1_costs();
            simplex();
            if (phase1_objective() > kFeasTol) return {LpStatus::infeasible, {}, 0.0};
            purge_artificials();
        }
        set_phase2_costs();
        if (!simplex()) return {LpStatus::unbounded, {}, 0.0};
        return extract();
    }

private:
    const LinearProgram& lp_;
    int n_;                       // structural variables
    int m_ = 0;                   // rows after eq expansion
    int ncols_ = 0;               // structural + slack + artificial
    int art_begin_ = 0;
    bool need_phase1_ = false;
    std::vector<double> T_;       // m x ncols
    std::vector<double> rhs_;     // current basic variable values
    std::vector<double> ub_;      // per column (after the lower-bound shift)
    std::vector<int> basis_;      // per row
    std::vector<VarState> state_; // per column
    std::vector<char> dead_row_;
    std::vector<double> d_;       // reduced costs

    double& at(int r, int c) { return T_[static_cast<size_t>(r) * ncols_ + c]; }
    double at(int r, int c) const { return T_[static_cast<size_t>(r) * ncols_ + c]; }

    void validate() const {
        if (lp_.lower.size() != lp_.objective.size() || lp_.upper.size() != lp_.objective.size())
            throw std::invalid_argument("lp: bounds size mismatch");
        for (int j = 0; j < n_; ++j) {
            if (!std::isfinite(lp_.lower[j]))
                throw std::invalid_argument("lp: lower bounds must be finite");
            if (lp_.upper[j] < lp_.lower[j]) throw std::invalid_argument("lp: lo > hi");
            if (!std::isfinite(lp_.objective[j])) throw std::invalid_argument("lp: bad objective");
        }
        for (const auto& row : lp_.rows) {
            if (static_cast<int>(row.coeffs.size()) != n_)
                throw std::invalid_argument("lp: row size mismatch");
            if (!std::isfinite(row.rhs)) throw std::invalid_argument("lp: bad rhs");
        }
    }

    // Expand eq rows into two inequalities, flip ge rows, shift x = lo + y,
    // add one slack per row and artificials where the shifted rhs is negative.
    void build() {
        struct Prepared {
            const std::vector<double>* coeffs;
            double rhs;
            bool negate;
        };
        std::vector<Prepared> prep;
        for (const auto& row : lp_.rows) {
            double shift = 0;
            for (int j = 0; j < n_; ++j) shift += row.coeffs[j] * lp_.lower[j];
            const double b = row.rhs - shift;
            if (row.rel == Relation::le || row.rel == Relation::eq)
                prep.push_back({&row.coeffs, b, false});
            if (row.rel == Relation::ge || row.rel == Relation::eq)
                prep.push_back({&row.coeffs, -b, true});
        }
        m_ = static_cast<int>(prep.size());
        int n_art = 0;
        for (const auto& p : prep)
            if (p.rhs < 0) ++n_art;
        need_phase1_ = n_art > 0;
        art_begin_ = n_ + m_;
        ncols_ = n_ + m_ + n_art;

        T_.assign(static_cast<size_t>(m_) * ncols_, 0.0);
        rhs_.assign(m_, 0.0);
        basis_.assign(m_, -1);
        dead_row_.assign(m_, 0);
        ub_.assign(ncols_, kInfVal);
        for (int j = 0; j < n_; ++j) ub_[j] = lp_.upper[j] - lp_.lower[j];
        state_.assign(ncols_, VarState::at_lower);

        int art = art_begin_;
        for (int r = 0; r < m_; ++r) {
            const auto& p = prep[r];
            const double sign = (p.rhs < 0) ? -1.0 : 1.0;
            const double row_sign = p.negate ? -sign : sign;
            for (int j = 0; j < n_; ++j) at(r, j) = row_sign * (*p.coeffs)[j];
            at(r, n_ + r) = sign;
            rhs_[r] = sign * p.rhs;
            if (p.rhs < 0) {
                at(r, art) = 1.0;
                basis_[r] = art;
                state_[art] = VarState::basic;
                ++art;
            } else {
                basis_[r] = n_ + r;
                state_[n_ + r] = VarState::basic;
            }
        }
    }

    void set_phase1_costs() {
        std::vector<double> c(ncols_, 0.0);
        for (int j = art_begin_; j < ncols_; ++j) c[j] = -1.0; // maximize -sum(artificials)
        compute_reduced_costs(c);
    }

    void set_phase2_costs() {
        std::vector<double> c(ncols_, 0.0);
        for (int j = 0; j < n_; ++j) c[j] = lp_.objective[j];
        compute_reduced_costs(c);
    }

    void compute_reduced_costs(const std::vector<double>& c) {
        d_ = c;
        for (int r = 0; r < m_; ++r) {
            if (dead_row_[r]) continue;
            const double cb = c[basis_[r]];
            if (cb == 0.0) continue;
            for (int j = 0; j < ncols_; ++j) d_[j] -= cb * at(r, j);
        }
        for (int r = 0; r < m_; ++r)
            if (!dead_row_[r]) d_[basis_[r]] = 0.0;
    }

    double phase1_objective() const {
        double total = 0;
        for (int r = 0; r < m_; ++r)
            if (!dead_row_[r] && basis_[r] >= art_begin_) total += rhs_[r];
        return total;
    }

    // Pivot basic artificials out at value zero, or mark their rows dead.
    void purge_artificials() {
        for (int r = 0; r < m_; ++r) {
            if (dead_row_[r] || basis_[r] < art_begin_) continue;
            int col = -1;
            for (int j = 0; j < art_begin_; ++j) {
                if (state_[j] != VarState::basic && std::abs(at(r, j)) > kPivotTol) {
                    col = j;
                    break;
                }
            }
            if (col < 0) {
                dead_row_[r] = 1;
                continue;
            }
            const double value = state_[col] == VarState::at_upper ? ub_[col] : 0.0;
            pivot(r, col);
            rhs_[r] = value; // degenerate swap: the artificial sat at zero
        }
    }

    // Row operations only; value bookkeeping is the caller's job.
    void pivot(int r, int col) {
        const double inv = 1.0 / at(r, col);
        for (int j = 0; j < ncols_; ++j) at(r, j) *= inv;
        at(r, col) = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == r || dead_row_[i]) continue;
            const double f = at(i, col);
            if (f == 0.0) continue;
            for (int j = 0; j < ncols_; ++j) at(i, j) -= f * at(r, j);
            at(i, col) = 0.0;
        }
        const double dc = d_[col];
        if (dc != 0.0)
            for (int j = 0; j < ncols_; ++j) d_[j] -= dc * at(r, j);
        d_[col] = 0.0;
        basis_[r] = col;
        state_[col] = VarState::basic;
    }

    // Returns false on an unbounded direction.
    bool simplex() {
        const long max_iters = 20000 + 200L * (m_ + ncols_);
        int stall = 0;
        bool bland = false;
        for (long iter = 0; iter < max_iters; ++iter) {
            int enter = -1;
            double best = 0;
            for (int j = 0; j < ncols_; ++j) {
                if (state_[j] == VarState::basic || j >= art_begin_ || ub_[j] <= kRatioTie)
                    continue;
                const double dj = d_[j];
                double gain = 0;
                if (state_[j] == VarState::at_lower && dj > kCostTol)
                    gain = dj;
                else if (state_[j] == VarState::at_upper && dj < -kCostTol)
                    gain = -dj;
                else
                    continue;
                if (bland) {
                    enter = j;
                    break;
                }
                if (gain > best) {
                    best = gain;
                    enter = j;
                }
            }
            if (enter < 0) return true;

            const double dir = state_[enter] == VarState::at_lower ? 1.0 : -1.0;
            double best_t = ub_[enter]; // own bound flip
            int leave_row = -1;         // -1 = flip
            bool leave_at_upper = false;
            for (int r = 0; r < m_; ++r) {
                if (dead_row_[r]) continue;
                const double delta = -dir * at(r, enter); // basic change per unit step
                double ratio;
                bool hits_upper;
                if (delta < -kPivotTol) {
                    ratio = rhs_[r] / (-delta);
                    hits_upper = false;
                } else if (delta > kPivotTol && std::isfinite(ub_[basis_[r]])) {
                    ratio = (ub_[basis_[r]] - rhs_[r]) / delta;
                    hits_upper = true;
                } else {
                    continue;
                }
                ratio = std::max(ratio, 0.0);
                bool take = false;
                if (ratio < best_t - kRatioTie) {
                    take = true;
                } else if (ratio <= best_t + kRatioTie && leave_row >= 0) {
                    take = bland ? basis_[r] < basis_[leave_row]
                                 : std::abs(at(r, enter)) > std::abs(at(leave_row, enter));
                }
                if (take) {
                    best_t = std::min(best_t, ratio);
                    leave_row = r;
                    leave_at_upper = hits_upper;
                }
            }

            if (!std::isfinite(best_t)) return false;

            if (leave_row < 0) {
                const double step = ub_[enter];
                for (int r = 0; r < m_; ++r)
                    if (!dead_row_[r]) rhs_[r] -= dir * step * at(r, enter);
                state_[enter] =
                    state_[enter] == VarState::at_lower ? VarState::at_upper : VarState::at_lower;
                stall = 0;
                bland = false;
                continue;
            }

            const double step = best_t;
            const int leaving = basis_[leave_row];
            for (int r = 0; r < m_; ++r)
                if (!dead_row_[r] && r != leave_row) rhs_[r] -= dir * step * at(r, enter);
            const double enter_value = (dir > 0 ? 0.0 : ub_[enter]) + dir * step;
            pivot(leave_row, enter);
            rhs_[leave_row] = enter_value;
            state_[leaving] = leave_at_upper ? VarState::at_upper : VarState::at_lower;

            if (step > kPivotTol) {
                stall = 0;
                bland = false;
            } else if (++stall > 64) {
                bland = true;
            }
        }
        throw std::runtime_error("simplex: iteration limit exceeded");
    }

    LpSolution extract() const {
        std::vector<double> y(ncols_, 0.0);
        for (int j = 0; j < ncols_; ++j)
            if (state_[j] == VarState::at_upper) y[j] = ub_[j];
        for (int r = 0; r < m_; ++r)
            if (!dead_row_[r]) y[basis_[r]] = rhs_[r];
        LpSolution sol;
        sol.status = LpStatus::optimal;
        sol.values.resize(n_);
        for (int j = 0; j < n_; ++j) sol.values[j] = lp_.lower[j] + y[j];
        sol.objective_value = 0;
        for (int j = 0; j < n_; ++j) sol.objective_value += lp_.objective[j] * sol.values[j];
        return sol;
    }
};

} // namespace

LpSolution solve_lp(const LinearProgram& lp) {
    Tableau tab(lp);
    return tab.run();
}

} // namespace bca
