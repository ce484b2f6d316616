#pragma once

#include <string>
#include <vector>

#include "mplasso/tree_groups.hpp"
#include "mplasso/types.hpp"

namespace mplasso {

/**
 * Observed data: covariates X (N x p), modifiers Z (N x K), responses Y (N x D).
 * Immutable once constructed; the constructor checks row counts and finiteness.
 */
class DesignData {
public:
    DesignData(Matrix X, Matrix Z, Matrix Y);

    const Matrix& X() const noexcept { return X_; }
    const Matrix& Z() const noexcept { return Z_; }
    const Matrix& Y() const noexcept { return Y_; }

    int N() const noexcept { return static_cast<int>(X_.rows()); }
    int p() const noexcept { return static_cast<int>(X_.cols()); }
    int K() const noexcept { return static_cast<int>(Z_.cols()); }
    int D() const noexcept { return static_cast<int>(Y_.cols()); }

    /// Rows selected by `rows`, in that order.
    DesignData subset(const std::vector<int>& rows) const;
    /// The single response column d as a D == 1 problem.
    DesignData response(int d) const;

private:
    Matrix X_;
    Matrix Z_;
    Matrix Y_;
};

/**
 * The interaction array W (p x (K+1) x N): W(j,0,i) = x_ij and
 * W(j,k,i) = x_ij * z_i,k-1 for k >= 1.
 *
 * Stored as its flattened N x p(K+1) design matrix whose row i concatenates
 * [x_ij, x_ij z_i1, ..., x_ij z_iK] over j; at() gives the three-index view.
 */
class InteractionTensor {
public:
    explicit InteractionTensor(const DesignData& data);
    InteractionTensor(const Matrix& X, const Matrix& Z);

    int N() const noexcept { return static_cast<int>(flat_.rows()); }
    int p() const noexcept { return p_; }
    int K() const noexcept { return K_; }

    double at(int j, int k, int i) const { return flat_(i, static_cast<Index>(j) * (K_ + 1) + k); }
    const Matrix& flat() const noexcept { return flat_; }
    /// N x (K+1) slab W_j.
    auto slab(int j) const { return flat_.middleCols(static_cast<Index>(j) * (K_ + 1), K_ + 1); }

    /// Logical array in (j, k, i) order with i fastest.
    std::vector<double> to_array() const;
    static InteractionTensor from_array(const std::vector<double>& array, int p, int K, int N);

private:
    InteractionTensor(Matrix flat, int p, int K) : flat_(std::move(flat)), p_(p), K_(K) {}

    Matrix flat_;
    int p_ = 0;
    int K_ = 0;
};

/**
 * Intercepts beta0 (D), modifier main effects theta0 (K x D) and the
 * coefficient array B (p x (K+1) x D) with B(j,0,d) = beta_jd and
 * B(j,1..K,d) = theta_jd. B is held as a p(K+1) x D matrix whose column d
 * is row j of B_d concatenated over j.
 */
struct CoefficientSet {
    Vector beta0;
    Matrix theta0;
    Matrix B;
    int p = 0;
    int K = 0;

    static CoefficientSet zeros(int p, int K, int D);

    int D() const noexcept { return static_cast<int>(beta0.size()); }
    Index row(int j, int k) const noexcept { return static_cast<Index>(j) * (K + 1) + k; }

    double& b(int j, int k, int d) { return B(row(j, k), d); }
    double b(int j, int k, int d) const { return B(row(j, k), d); }
    double beta(int j, int d) const { return B(row(j, 0), d); }
    double theta(int j, int k, int d) const { return B(row(j, k + 1), d); }

    /// B_d as a p x (K+1) view.
    Eigen::Map<const RowMatrix> slice(int d) const { return {B.col(d).data(), p, K + 1}; }
    Eigen::Map<RowMatrix> slice(int d) { return {B.col(d).data(), p, K + 1}; }

    /// Throws DimensionError when shapes do not fit `data`.
    void check_matches(const DesignData& data) const;
};

enum class RhoAdapt { fixed, paper_rule, residual_balance };

/// Linear-solve strategy for the multi-response coefficient update.
enum class LinearSolver { automatic, cholesky, woodbury, conjugate_gradient };

struct Hyperparameters {
    double lambda1 = 0.0;  // tree internal nodes
    double lambda2 = 0.0;  // tree leaves
    double lambda3 = 0.0;  // pliable penalty (lambda of the single-response model)
    double alpha = 0.5;
    double rho_init = 1.0;
    double eps_abs = 1e-6;
    double eps_rel = 1e-4;
    int max_iter = 5000;
    RhoAdapt rho_adapt = RhoAdapt::residual_balance;
    LinearSolver linear_solver = LinearSolver::automatic;
    /// Objective is recorded every this many iterations (0 disables the trace).
    int trace_every = 10;

    void validate() const;
};

RhoAdapt parse_rho_adapt(const std::string& name);
std::string to_string(RhoAdapt rule);
LinearSolver parse_linear_solver(const std::string& name);
std::string to_string(LinearSolver solver);

Matrix predict(const InteractionTensor& W, const Matrix& Z, const CoefficientSet& coef);
Matrix predict(const DesignData& data, const CoefficientSet& coef);

/// Penalty part of the objective (no loss). `tree` may be null only when D == 1.
double penalty(const CoefficientSet& coef, const Hyperparameters& hp, const TreeGroups* tree);

/**
 * 1/(2N) ||Y - Yhat||_F^2 plus the pliable penalty and, when a tree is given,
 * the lambda1/lambda2 tree terms. Without a tree the data must have D == 1 and
 * lambda1 = lambda2 = 0.
 */
double objective(const DesignData& data, const CoefficientSet& coef, const Hyperparameters& hp,
                 const TreeGroups* tree);
double objective(const DesignData& data, const InteractionTensor& W, const CoefficientSet& coef,
                 const Hyperparameters& hp, const TreeGroups* tree);

} // namespace mplasso
