#pragma once

#include <memory>
#include <vector>

#include "mplasso/admm_common.hpp"
#include "mplasso/core_model.hpp"
#include "mplasso/prox_ops.hpp"
#include "mplasso/tree_groups.hpp"
#include "mplasso/types.hpp"

namespace mplasso {

/**
 * ADMM iterate for the tree-guided multi-response problem.
 *
 * Column d of B, Q, P, E_tilde, H_tilde holds B_d with rows j(K+1)+k; V and O
 * hold the pliable group copies with rows 2j(K+1)+l. E and H have one row per
 * (internal group m, member u) and p(K+1) columns. Multipliers are scaled.
 */
struct AdmmStateMulti {
    Matrix B;
    Matrix V, O;
    Matrix Q, P;
    RowMatrix E, H;
    Matrix E_tilde, H_tilde;
    double rho = 1.0;
    double r_norm = 0.0;
    double s_norm = 0.0;
    int iter = 0;

    static AdmmStateMulti zeros(int p, int K, int D, int group_rows, double rho);
};

/**
 * Solves (W'W/N + C_d) b = phi for each response d, C_d diagonal.
 *
 * cholesky factors the dense p(K+1) system per response; woodbury works
 * through the N x N capacitance matrix (exact, used when N < p(K+1));
 * conjugate_gradient is preconditioned by the system diagonal and
 * warm-started from the incoming b. Factors are valid for one rho.
 */
class CoefficientSolver {
public:
    CoefficientSolver(std::shared_ptr<const Matrix> design, int K, LinearSolver choice);

    LinearSolver mode() const noexcept { return mode_; }
    void prepare(double rho, const PliableExpansion& pliable, const Vector& I_diag);
    bool prepared_for(double rho) const noexcept { return rho_ == rho; }

    /// `b` carries the warm start in and the solution out.
    void solve(int d, const Vector& phi, Eigen::Ref<Vector> b) const;
    /// All columns at once; column d of `B` is the warm start for response d.
    void solve_all(const Matrix& Phi, Matrix& B) const;
    /// Dense W'W/N + C_d for the prepared rho.
    Matrix system_matrix(int d) const;
    /// C_d diagonal in coefficient (j-major) order.
    const Vector& c_diag(int d) const { return c_[d]; }

private:
    std::shared_ptr<const Matrix> design_;
    int p_ = 0;
    int K_ = 0;
    LinearSolver mode_;
    double rho_ = -1.0;
    std::vector<Vector> c_;
    // cholesky
    std::shared_ptr<const Matrix> gram_;
    std::vector<Eigen::LLT<Matrix>> dense_factors_;
    // woodbury
    std::shared_ptr<const Matrix> outer_main_;   // U_main U_main' / N
    std::shared_ptr<const Matrix> outer_inter_;  // U_inter U_inter' / N
    std::vector<Eigen::LLT<Matrix>> capacitance_;
    // conjugate gradient
    Vector gram_diag_;
};

/// Data side of the coefficient update: design, working responses R and W'R/N.
class WorkspaceMulti {
public:
    WorkspaceMulti(Matrix design, Matrix R, int K, LinearSolver choice = LinearSolver::automatic);

    int N() const noexcept { return static_cast<int>(design_->rows()); }
    int p() const noexcept { return p_; }
    int K() const noexcept { return K_; }
    int D() const noexcept { return static_cast<int>(R_.cols()); }

    const Matrix& design() const noexcept { return *design_; }
    const Matrix& R() const noexcept { return R_; }
    const Matrix& WtR() const noexcept { return WtR_; }
    CoefficientSolver& solver() noexcept { return solver_; }
    const CoefficientSolver& solver() const noexcept { return solver_; }

private:
    std::shared_ptr<const Matrix> design_;
    Matrix R_;
    Matrix WtR_;
    int p_ = 0;
    int K_ = 0;
    CoefficientSolver solver_;
};

/// Right-hand side phi of the B_d system.
Vector coefficient_rhs(const AdmmStateMulti& state, const WorkspaceMulti& ws, int d, const GroupExpansion& expansion);

/// Every column of phi, n x D.
Matrix coefficient_rhs_all(const AdmmStateMulti& state, const WorkspaceMulti& ws, const GroupExpansion& expansion);

/// Solves for B_d given the current auxiliaries and multipliers.
void update_B_d(AdmmStateMulti& state, WorkspaceMulti& ws, int d, const GroupExpansion& expansion);
/// Same as update_B_d over every d; the columns do not interact.
void update_B(AdmmStateMulti& state, WorkspaceMulti& ws, const GroupExpansion& expansion);

/// Pliable group prox per (j, d) with threshold (1 - alpha) lambda3 / rho.
void update_V_multi(AdmmStateMulti& state, int K, double lambda3, double alpha);
/// l1 prox on interactions with threshold alpha lambda3 / rho; main effects pass through.
void update_Q_multi(AdmmStateMulti& state, int K, double lambda3, double alpha);
/// Group prox of each internal-node block (weighted copies plus H) with threshold lambda1 / rho.
void update_E(AdmmStateMulti& state, int K, const GroupExpansion& expansion, double lambda1);
/// As above with response_copies(B) already computed.
void update_E(AdmmStateMulti& state, int K, const GroupExpansion& expansion, double lambda1, const RowMatrix& copies);
/// Group prox of B_jd + H_tilde_jd with threshold lambda2 w_d / rho.
void update_E_tilde(AdmmStateMulti& state, int K, const GroupExpansion& expansion, double lambda2);
/// P += B - Q; O += G B - V; H += I B' - E; H_tilde += B - E_tilde.
void update_multipliers_multi(AdmmStateMulti& state, int K, const GroupExpansion& expansion);
void update_multipliers_multi(AdmmStateMulti& state, int K, const RowMatrix& copies);

/// Weighted response copies I B' (rows (m,u), columns p(K+1)).
RowMatrix response_copies(const Matrix& B, const GroupExpansion& expansion);

struct MultiFit {
    CoefficientSet coef;
    ConvergenceReport report;
    AdmmStateMulti state;
};

/**
 * Multi-response problem prepared for repeated solves. As in the
 * single-response case the intercept block is profiled out of the
 * coefficient update and refit by least squares on return.
 */
class MultiResponseProblem {
public:
    MultiResponseProblem(const DesignData& data, TreeGroups groups,
                         LinearSolver choice = LinearSolver::automatic);

    MultiFit solve(const Hyperparameters& hp, const AdmmStateMulti* warm = nullptr) const;

    const DesignData& data() const noexcept { return data_; }
    const TreeGroups& groups() const noexcept { return groups_; }
    const GroupExpansion& expansion() const noexcept { return expansion_; }
    const InteractionTensor& tensor() const noexcept { return tensor_; }
    const WorkspaceMulti& workspace() const noexcept { return workspace_; }

private:
    DesignData data_;
    TreeGroups groups_;
    GroupExpansion expansion_;
    InteractionTensor tensor_;
    InterceptProfile profile_;
    WorkspaceMulti workspace_;
};

MultiFit fit_multi(const DesignData& data, const Hyperparameters& hp, const TreeGroups& groups,
                   const AdmmStateMulti* warm = nullptr);

} // namespace mplasso
