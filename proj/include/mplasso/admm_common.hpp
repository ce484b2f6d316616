#pragma once

#include <vector>

#include "mplasso/core_model.hpp"
#include "mplasso/types.hpp"

namespace mplasso {

struct ConvergenceReport {
    bool converged = false;
    int iterations = 0;
    double r_norm = 0.0;
    double s_norm = 0.0;
    double eps_pri = 0.0;
    double eps_dual = 0.0;
    double rho = 0.0;
    int rho_changes = 0;
    std::vector<int> trace_iterations;
    std::vector<double> objective_trace;
};

/// Stopping thresholds built from the constraint dimension and current norms.
struct Tolerances {
    double eps_pri = 0.0;
    double eps_dual = 0.0;
};

Tolerances stopping_tolerances(double dimension, double primal_lhs_norm, double primal_rhs_norm,
                               double dual_norm, const Hyperparameters& hp);

/**
 * Next rho under the chosen rule, or the same rho when no change is due.
 * residual_balance: x2 when r > 10 s, /2 when s > 10 r.
 * paper_rule: x2 when rho > 10 s, /2 when 10 rho < s.
 */
double next_rho(RhoAdapt rule, double rho, double r_norm, double s_norm);

/**
 * Removes the unpenalized intercept block [1, Z] from a least-squares problem.
 *
 * project() maps M to (I - P)M with P the orthogonal projector onto span[1, Z];
 * intercepts() returns the least-squares (beta0, theta0) of a residual matrix
 * on [1, Z]. Rank-deficient Z (e.g. dummy columns summing to one) is fine.
 */
class InterceptProfile {
public:
    explicit InterceptProfile(const Matrix& Z);

    Matrix project(const Matrix& M) const;
    /// Returns a (K+1) x cols matrix: row 0 holds beta0, rows 1..K theta0.
    Matrix intercepts(const Matrix& residual) const;

private:
    Matrix basis_;  // orthonormal basis of span[1, Z]
    Matrix design_;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod_;
};

} // namespace mplasso
