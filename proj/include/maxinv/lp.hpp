#pragma once

#include "maxinv/error.hpp"
#include "maxinv/types.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace maxinv {

/// maximize objective . z  subject to  lower <= z <= upper,  rows * z <= rhs.
///
/// Bounds may be infinite. Each row of `rows` is one inequality.
template <typename Scalar>
struct LinearProgram {
    Vector<Scalar> objective;
    Vector<Scalar> lower;
    Vector<Scalar> upper;
    Matrix<Scalar> rows;
    Vector<Scalar> rhs;

    LinearProgram() = default;

    explicit LinearProgram(Index num_vars)
        : objective(Vector<Scalar>::Zero(num_vars)),
          lower(Vector<Scalar>::Zero(num_vars)),
          upper(Vector<Scalar>::Constant(num_vars, std::numeric_limits<Scalar>::infinity())),
          rows(0, num_vars),
          rhs(0) {}

    Index num_vars() const { return objective.size(); }
    Index num_rows() const { return rows.rows(); }

    void add_row(const Vector<Scalar>& coefficients, Scalar bound) {
        if (coefficients.size() != num_vars()) throw InputError("row length does not match variable count");
        rows.conservativeResize(rows.rows() + 1, num_vars());
        rows.row(rows.rows() - 1) = coefficients.transpose();
        rhs.conservativeResize(rhs.size() + 1);
        rhs[rhs.size() - 1] = bound;
    }

    void validate() const {
        const Index n = num_vars();
        if (lower.size() != n || upper.size() != n) throw InputError("bound vectors must match objective length");
        if (rows.cols() != n && rows.rows() > 0) throw InputError("row length does not match variable count");
        if (rhs.size() != rows.rows()) throw InputError("rhs length does not match row count");
        if (!objective.allFinite() || !rhs.allFinite() || !rows.allFinite()) {
            throw InputError("linear program coefficients must be finite");
        }
        for (Index j = 0; j < n; ++j) {
            if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j]) {
                throw InputError("variable " + std::to_string(j) + " has lower bound above upper bound");
            }
            if (lower[j] == std::numeric_limits<Scalar>::infinity() ||
                upper[j] == -std::numeric_limits<Scalar>::infinity()) {
                throw InputError("variable " + std::to_string(j) + " has an empty bound interval");
            }
        }
    }
};

enum class LPStatus { Optimal, Infeasible, Unbounded };

inline std::string_view to_string(LPStatus s) {
    switch (s) {
        case LPStatus::Optimal: return "optimal";
        case LPStatus::Infeasible: return "infeasible";
        case LPStatus::Unbounded: return "unbounded";
    }
    return "optimal";
}

template <typename Scalar>
struct LPSolution {
    LPStatus status = LPStatus::Infeasible;
    Vector<Scalar> values;
    Scalar objective_value = std::numeric_limits<Scalar>::quiet_NaN();
    int iterations = 0;
};

struct SimplexOptions {
    double pivot_tolerance = 1e-10;
    double feasibility_tolerance = 1e-8;
    double optimality_tolerance = 1e-9;
    int refactor_interval = 32;
    int max_iterations = 0;  // 0: derived from problem size
};

namespace detail {

// Bounded-variable revised simplex with an explicit dense basis inverse.
//
// Columns are ordered structurals, then one slack per row (A z + s = b,
// s >= 0), then artificials for rows whose initial residual is negative.
// Entering and leaving choices both follow Bland's lowest-index rule, so
// the pivot sequence is a pure function of the input.
template <typename Scalar>
class BoundedSimplex {
public:
    BoundedSimplex(const LinearProgram<Scalar>& lp, const SimplexOptions& opt)
        : lp_(lp), opt_(opt), n_(lp.num_vars()), m_(lp.num_rows()) {}

    LPSolution<Scalar> run() {
        initialise();
        LPSolution<Scalar> out;
        const int limit = opt_.max_iterations > 0 ? opt_.max_iterations
                                                   : static_cast<int>(200 * (n_ + m_ + 10));

        if (!artificial_row_.empty()) {
            cost_.setZero(total_);
            for (Index j = first_artificial(); j < total_; ++j) cost_[j] = Scalar(-1);
            const LPStatus phase1 = iterate(limit);
            if (phase1 != LPStatus::Optimal) throw std::logic_error("phase one cannot be unbounded");
            refactor();
            for (Index j = first_artificial(); j < total_; ++j) {
                if (x_[j] > Scalar(opt_.feasibility_tolerance)) {
                    out.status = LPStatus::Infeasible;
                    out.values = x_.head(n_);
                    out.iterations = iterations_;
                    return out;
                }
            }
            retire_artificials();
        }

        cost_.setZero(total_);
        cost_.head(n_) = lp_.objective;
        out.status = iterate(limit);
        refactor();
        out.iterations = iterations_;
        out.values = x_.head(n_);
        for (Index j = 0; j < n_; ++j) {
            // Snap values sitting within tolerance of a bound onto it.
            if (std::abs(out.values[j] - lp_.lower[j]) <= Scalar(opt_.feasibility_tolerance)) out.values[j] = lp_.lower[j];
            if (std::abs(out.values[j] - lp_.upper[j]) <= Scalar(opt_.feasibility_tolerance)) out.values[j] = lp_.upper[j];
        }
        out.objective_value = out.status == LPStatus::Unbounded ? std::numeric_limits<Scalar>::infinity()
                                                                : lp_.objective.dot(out.values);
        return out;
    }

private:
    enum class State { Basic, AtLower, AtUpper, Free };

    static constexpr Scalar inf() { return std::numeric_limits<Scalar>::infinity(); }

    Index first_artificial() const { return n_ + m_; }

    // Column j of [A | I | -I_art] applied as y . col_j.
    Scalar dot_column(const Vector<Scalar>& y, Index j) const {
        if (j < n_) return lp_.rows.col(j).dot(y);
        if (j < n_ + m_) return y[j - n_];
        return -y[artificial_row_[j - first_artificial()]];
    }

    Vector<Scalar> column(Index j) const {
        if (j < n_) return lp_.rows.col(j);
        Vector<Scalar> e = Vector<Scalar>::Zero(m_);
        if (j < n_ + m_) e[j - n_] = Scalar(1);
        else e[artificial_row_[j - first_artificial()]] = Scalar(-1);
        return e;
    }

    void initialise() {
        lower_.resize(n_ + m_);
        upper_.resize(n_ + m_);
        lower_.head(n_) = lp_.lower;
        upper_.head(n_) = lp_.upper;
        lower_.tail(m_).setZero();
        upper_.tail(m_).setConstant(inf());

        Vector<Scalar> x0(n_);
        std::vector<State> state(static_cast<std::size_t>(n_));
        for (Index j = 0; j < n_; ++j) {
            if (std::isfinite(lower_[j])) {
                x0[j] = lower_[j];
                state[j] = State::AtLower;
            } else if (std::isfinite(upper_[j])) {
                x0[j] = upper_[j];
                state[j] = State::AtUpper;
            } else {
                x0[j] = Scalar(0);
                state[j] = State::Free;
            }
        }
        const Vector<Scalar> residual = m_ > 0 ? Vector<Scalar>(lp_.rhs - lp_.rows * x0) : Vector<Scalar>(0);
        for (Index i = 0; i < m_; ++i) {
            if (residual[i] < Scalar(0)) artificial_row_.push_back(i);
        }

        total_ = n_ + m_ + static_cast<Index>(artificial_row_.size());
        lower_.conservativeResize(total_);
        upper_.conservativeResize(total_);
        for (Index j = first_artificial(); j < total_; ++j) {
            lower_[j] = Scalar(0);
            upper_[j] = inf();
        }

        x_ = Vector<Scalar>::Zero(total_);
        x_.head(n_) = x0;
        state_.assign(static_cast<std::size_t>(total_), State::AtLower);
        for (Index j = 0; j < n_; ++j) state_[j] = state[j];
        basis_.assign(static_cast<std::size_t>(m_), 0);
        binv_ = Matrix<Scalar>::Identity(m_, m_);

        std::size_t next_art = 0;
        for (Index i = 0; i < m_; ++i) {
            if (next_art < artificial_row_.size() && artificial_row_[next_art] == i) {
                const Index a = first_artificial() + static_cast<Index>(next_art);
                basis_[i] = a;
                state_[a] = State::Basic;
                x_[a] = -residual[i];
                binv_(i, i) = Scalar(-1);
                ++next_art;
            } else {
                basis_[i] = n_ + i;
                state_[n_ + i] = State::Basic;
                x_[n_ + i] = residual[i];
            }
        }
    }

    void refactor() {
        if (m_ == 0) return;
        Matrix<Scalar> b(m_, m_);
        for (Index i = 0; i < m_; ++i) b.col(i) = column(basis_[i]);
        binv_ = b.partialPivLu().inverse();

        Vector<Scalar> rhs = lp_.rhs;
        for (Index j = 0; j < total_; ++j) {
            if (state_[j] == State::Basic || x_[j] == Scalar(0)) continue;
            rhs -= column(j) * x_[j];
        }
        const Vector<Scalar> xb = binv_ * rhs;
        for (Index i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
        since_refactor_ = 0;
    }

    void pivot(Index row, const Vector<Scalar>& alpha, Index entering) {
        const Scalar p = alpha[row];
        binv_.row(row) /= p;
        for (Index i = 0; i < m_; ++i) {
            if (i == row || alpha[i] == Scalar(0)) continue;
            binv_.row(i) -= alpha[i] * binv_.row(row);
        }
        basis_[row] = entering;
        state_[entering] = State::Basic;
        if (++since_refactor_ >= opt_.refactor_interval) refactor();
    }

    LPStatus iterate(int limit) {
        const Scalar opt_tol = Scalar(opt_.optimality_tolerance);
        const Scalar piv_tol = Scalar(opt_.pivot_tolerance);
        Vector<Scalar> cb(m_);
        while (true) {
            if (++iterations_ > limit) throw std::runtime_error("simplex iteration limit exceeded");

            for (Index i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
            const Vector<Scalar> y = binv_.transpose() * cb;

            Index entering = -1;
            int direction = 0;
            for (Index j = 0; j < total_; ++j) {
                const State s = state_[j];
                if (s == State::Basic || (lower_[j] == upper_[j])) continue;
                const Scalar d = cost_[j] - dot_column(y, j);
                if (d > opt_tol && (s == State::AtLower || s == State::Free)) {
                    entering = j;
                    direction = 1;
                    break;
                }
                if (d < -opt_tol && (s == State::AtUpper || s == State::Free)) {
                    entering = j;
                    direction = -1;
                    break;
                }
            }
            if (entering < 0) return LPStatus::Optimal;

            const Vector<Scalar> alpha = binv_ * column(entering);
            const Scalar span = upper_[entering] - lower_[entering];

            Index leave_row = -1;
            Scalar best = inf();
            bool leave_at_lower = true;
            for (Index i = 0; i < m_; ++i) {
                const Scalar rate = Scalar(direction) * alpha[i];
                const Index var = basis_[i];
                Scalar limit_i = inf();
                bool to_lower = true;
                if (rate > piv_tol && std::isfinite(lower_[var])) {
                    limit_i = (x_[var] - lower_[var]) / rate;
                } else if (rate < -piv_tol && std::isfinite(upper_[var])) {
                    limit_i = (upper_[var] - x_[var]) / -rate;
                    to_lower = false;
                } else {
                    continue;
                }
                if (limit_i < Scalar(0)) limit_i = Scalar(0);
                if (limit_i < best || (limit_i == best && leave_row >= 0 && var < basis_[leave_row])) {
                    best = limit_i;
                    leave_row = i;
                    leave_at_lower = to_lower;
                }
            }

            if (leave_row < 0 && !std::isfinite(span)) return LPStatus::Unbounded;

            if (leave_row < 0 || span <= best) {
                // Bound flip: the entering variable crosses its whole range.
                const Scalar step = Scalar(direction) * span;
                for (Index i = 0; i < m_; ++i) x_[basis_[i]] -= step * alpha[i];
                if (direction > 0) {
                    x_[entering] = upper_[entering];
                    state_[entering] = State::AtUpper;
                } else {
                    x_[entering] = lower_[entering];
                    state_[entering] = State::AtLower;
                }
                continue;
            }

            const Scalar step = Scalar(direction) * best;
            for (Index i = 0; i < m_; ++i) x_[basis_[i]] -= step * alpha[i];
            x_[entering] += step;
            const Index leaving = basis_[leave_row];
            x_[leaving] = leave_at_lower ? lower_[leaving] : upper_[leaving];
            state_[leaving] = leave_at_lower ? State::AtLower : State::AtUpper;
            pivot(leave_row, alpha, entering);
        }
    }

    // After phase one: pin artificials to zero and pivot basic ones out where
    // a non-artificial column can replace them.
    void retire_artificials() {
        const Scalar piv_tol = Scalar(opt_.pivot_tolerance);
        for (Index j = first_artificial(); j < total_; ++j) {
            upper_[j] = Scalar(0);
            if (state_[j] != State::Basic) {
                x_[j] = Scalar(0);
                state_[j] = State::AtLower;
            }
        }
        for (Index row = 0; row < m_; ++row) {
            const Index art = basis_[row];
            if (art < first_artificial()) continue;
            for (Index j = 0; j < first_artificial(); ++j) {
                if (state_[j] == State::Basic) continue;
                const Vector<Scalar> alpha = binv_ * column(j);
                if (std::abs(alpha[row]) <= piv_tol) continue;
                x_[art] = Scalar(0);
                state_[art] = State::AtLower;
                pivot(row, alpha, j);
                break;
            }
        }
        for (Index j = first_artificial(); j < total_; ++j) {
            if (state_[j] != State::Basic) x_[j] = Scalar(0);
        }
        refactor();
    }

    const LinearProgram<Scalar>& lp_;
    SimplexOptions opt_;
    Index n_;
    Index m_;
    Index total_ = 0;
    std::vector<Index> artificial_row_;
    Vector<Scalar> lower_, upper_, cost_, x_;
    std::vector<State> state_;
    std::vector<Index> basis_;
    Matrix<Scalar> binv_;
    int iterations_ = 0;
    int since_refactor_ = 0;
};

}  // namespace detail

/// Solves a small dense LP to an optimal basic solution.
///
/// Deterministic: identical inputs yield bit-identical solutions, which also
/// fixes which vertex is returned when the optimum is not unique.
template <typename Scalar>
LPSolution<Scalar> solve(const LinearProgram<Scalar>& lp, const SimplexOptions& options = {}) {
    lp.validate();
    return detail::BoundedSimplex<Scalar>(lp, options).run();
}

/// Largest violation of bounds and rows at z; zero when z is feasible.
template <typename Scalar>
Scalar max_violation(const LinearProgram<Scalar>& lp, const Vector<Scalar>& z) {
    Scalar worst = Scalar(0);
    for (Index j = 0; j < lp.num_vars(); ++j) {
        worst = std::max({worst, lp.lower[j] - z[j], z[j] - lp.upper[j]});
    }
    if (lp.num_rows() > 0) {
        const Vector<Scalar> slack = lp.rows * z - lp.rhs;
        if (slack.size() > 0) worst = std::max(worst, slack.maxCoeff());
    }
    return worst;
}

}  // namespace maxinv
