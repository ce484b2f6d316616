#pragma once

#include <memory>
#include <vector>

#include "mplasso/admm_common.hpp"
#include "mplasso/core_model.hpp"
#include "mplasso/types.hpp"

namespace mplasso {

/**
 * ADMM iterate for the single-response problem. Multipliers O and P are kept
 * in scaled form (dual variable divided by rho), so a rho change rescales them.
 */
struct AdmmStateSingle {
    RowMatrix B;  // p x (K+1)
    RowMatrix V;  // p x 2(K+1), the two pliable group copies
    RowMatrix O;
    RowMatrix Q;  // p x (K+1)
    RowMatrix P;
    double rho = 1.0;
    double r_norm = 0.0;
    double s_norm = 0.0;
    int iter = 0;

    static AdmmStateSingle zeros(int p, int K, double rho);
    int p() const noexcept { return static_cast<int>(B.rows()); }
    int K() const noexcept { return static_cast<int>(B.cols()) - 1; }
};

/**
 * Data side of the coefficient sweep: the design (N x p(K+1), column blocks
 * W_j), the working response y_tilde, the running residual
 * y_tilde - sum_j W_j B_j, and per-j Cholesky factors of
 * W_j'W_j/N + rho(G'G + I), valid for one rho at a time.
 */
class WorkspaceSingle {
public:
    WorkspaceSingle(Matrix design, Vector y_tilde, int K);

    int N() const noexcept { return static_cast<int>(design_->rows()); }
    int p() const noexcept { return p_; }
    int K() const noexcept { return K_; }

    void factorize(double rho);
    bool factorized_for(double rho) const noexcept { return factor_rho_ == rho; }

    void reset_residual(const RowMatrix& B);
    const Vector& residual() const noexcept { return residual_; }
    const Matrix& design() const noexcept { return *design_; }
    const Vector& y_tilde() const noexcept { return y_tilde_; }

    /// System matrix of block j for the cached rho.
    Matrix system_matrix(int j) const;

private:
    friend Vector update_B_j(AdmmStateSingle& state, WorkspaceSingle& ws, int j);

    // Shared between copies; each solve copies the workspace.
    std::shared_ptr<const Matrix> design_;
    std::shared_ptr<const std::vector<Matrix>> gram_;  // W_j'W_j / N
    Vector y_tilde_;
    Vector residual_;
    int p_ = 0;
    int K_ = 0;
    std::vector<Eigen::LLT<Matrix>> factors_;
    double factor_rho_ = -1.0;
};

/// Exact minimizer of the augmented Lagrangian over B_j; updates the residual.
Vector update_B_j(AdmmStateSingle& state, WorkspaceSingle& ws, int j);

/// V_j^s = group soft-threshold(G B_j + O_j, (1-alpha) lambda / rho) per group s.
void update_V(AdmmStateSingle& state, double lambda, double alpha);

/// Q_jk = soft_threshold(B_jk + P_jk, alpha lambda / rho) for k >= 1; Q_j0 = B_j0 + P_j0.
void update_Q(AdmmStateSingle& state, double lambda, double alpha);

/// P += B - Q; O += G B - V.
void update_multipliers(AdmmStateSingle& state);

struct SingleFit {
    CoefficientSet coef;
    ConvergenceReport report;
    AdmmStateSingle state;
};

/**
 * Single-response problem prepared for repeated solves (paths, warm starts).
 *
 * The unpenalized block (beta0, theta0) is profiled out: the coefficient
 * sweep works on the design and response projected off span[1, Z], which is
 * the same as refreshing (beta0, theta0) by exact least squares on every
 * sweep. The returned intercepts are the least-squares fit of the final
 * residual.
 */
class SingleResponseProblem {
public:
    explicit SingleResponseProblem(const DesignData& data);

    SingleFit solve(const Hyperparameters& hp, const AdmmStateSingle* warm = nullptr) const;

    const DesignData& data() const noexcept { return data_; }
    const InteractionTensor& tensor() const noexcept { return tensor_; }
    const WorkspaceSingle& workspace() const noexcept { return workspace_; }
    const InterceptProfile& profile() const noexcept { return profile_; }

private:
    DesignData data_;
    InteractionTensor tensor_;
    InterceptProfile profile_;
    WorkspaceSingle workspace_;
};

SingleFit fit_single(const DesignData& data, const Hyperparameters& hp, const AdmmStateSingle* warm = nullptr);

} // namespace mplasso
