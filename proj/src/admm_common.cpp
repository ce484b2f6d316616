#include "mplasso/admm_common.hpp"

#include <algorithm>
#include <cmath>

namespace mplasso {

Tolerances stopping_tolerances(double dimension, double primal_lhs_norm, double primal_rhs_norm,
                               double dual_norm, const Hyperparameters& hp) {
    const double base = std::sqrt(dimension) * hp.eps_abs;
    return {base + hp.eps_rel * std::max(primal_lhs_norm, primal_rhs_norm), base + hp.eps_rel * dual_norm};
}

double next_rho(RhoAdapt rule, double rho, double r_norm, double s_norm) {
    switch (rule) {
    case RhoAdapt::fixed:
        return rho;
    case RhoAdapt::residual_balance:
        if (r_norm > 10.0 * s_norm) return 2.0 * rho;
        if (s_norm > 10.0 * r_norm) return rho / 2.0;
        return rho;
    case RhoAdapt::paper_rule:
        if (rho > 10.0 * s_norm) return 2.0 * rho;
        if (10.0 * rho < s_norm) return rho / 2.0;
        return rho;
    }
    return rho;
}

InterceptProfile::InterceptProfile(const Matrix& Z) {
    design_.resize(Z.rows(), Z.cols() + 1);
    design_.col(0).setOnes();
    design_.rightCols(Z.cols()) = Z;
    cod_.compute(design_);
    // Orthonormal basis for the column space from a rank-revealing QR.
    Eigen::ColPivHouseholderQR<Matrix> qr(design_);
    const Index rank = qr.rank();
    Matrix Q = qr.householderQ() * Matrix::Identity(design_.rows(), design_.rows());
    basis_ = Q.leftCols(rank);
}

Matrix InterceptProfile::project(const Matrix& M) const {
    return M - basis_ * (basis_.transpose() * M);
}

Matrix InterceptProfile::intercepts(const Matrix& residual) const { return cod_.solve(residual); }

} // namespace mplasso
