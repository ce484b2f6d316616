#include "mplasso/core_model.hpp"

#include <cmath>

namespace mplasso {

namespace {

void require_finite(const Matrix& m, const char* name) {
    if (!m.allFinite()) {
        throw ValidationError(std::string(name) + " contains non-finite entries");
    }
}

} // namespace

DesignData::DesignData(Matrix X, Matrix Z, Matrix Y)
    : X_(std::move(X)), Z_(std::move(Z)), Y_(std::move(Y)) {
    if (X_.cols() < 1) throw DimensionError("X must have at least one column");
    if (Z_.cols() < 1) throw DimensionError("Z must have at least one column");
    if (Y_.cols() < 1) throw DimensionError("Y must have at least one column");
    if (X_.rows() < 1) throw DimensionError("X must have at least one row");
    if (Z_.rows() != X_.rows()) {
        throw DimensionError("Z has " + std::to_string(Z_.rows()) + " rows but X has " +
                             std::to_string(X_.rows()));
    }
    if (Y_.rows() != X_.rows()) {
        throw DimensionError("Y has " + std::to_string(Y_.rows()) + " rows but X has " +
                             std::to_string(X_.rows()));
    }
    require_finite(X_, "X");
    require_finite(Z_, "Z");
    require_finite(Y_, "Y");
}

DesignData DesignData::subset(const std::vector<int>& rows) const {
    Matrix X(rows.size(), p()), Z(rows.size(), K()), Y(rows.size(), D());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0 || rows[r] >= N()) throw ValidationError("row index out of range");
        X.row(r) = X_.row(rows[r]);
        Z.row(r) = Z_.row(rows[r]);
        Y.row(r) = Y_.row(rows[r]);
    }
    return {std::move(X), std::move(Z), std::move(Y)};
}

DesignData DesignData::response(int d) const {
    if (d < 0 || d >= D()) throw ValidationError("response index out of range");
    return {X_, Z_, Y_.col(d)};
}

InteractionTensor::InteractionTensor(const DesignData& data) : InteractionTensor(data.X(), data.Z()) {}

InteractionTensor::InteractionTensor(const Matrix& X, const Matrix& Z) : p_(static_cast<int>(X.cols())), K_(static_cast<int>(Z.cols())) {
    if (X.rows() != Z.rows()) {
        throw DimensionError("Z has " + std::to_string(Z.rows()) + " rows but X has " +
                             std::to_string(X.rows()));
    }
    const Index width = K_ + 1;
    flat_.resize(X.rows(), static_cast<Index>(p_) * width);
    for (int j = 0; j < p_; ++j) {
        flat_.col(j * width) = X.col(j);
        for (int k = 0; k < K_; ++k) {
            flat_.col(j * width + k + 1) = X.col(j).cwiseProduct(Z.col(k));
        }
    }
}

std::vector<double> InteractionTensor::to_array() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(flat_.size()));
    for (int j = 0; j < p_; ++j)
        for (int k = 0; k <= K_; ++k)
            for (int i = 0; i < N(); ++i) out.push_back(at(j, k, i));
    return out;
}

InteractionTensor InteractionTensor::from_array(const std::vector<double>& array, int p, int K, int N) {
    if (array.size() != static_cast<std::size_t>(p) * (K + 1) * N) {
        throw DimensionError("interaction array size does not match p(K+1)N");
    }
    Matrix flat(N, static_cast<Index>(p) * (K + 1));
    std::size_t pos = 0;
    for (int j = 0; j < p; ++j)
        for (int k = 0; k <= K; ++k)
            for (int i = 0; i < N; ++i) flat(i, static_cast<Index>(j) * (K + 1) + k) = array[pos++];
    return {std::move(flat), p, K};
}

CoefficientSet CoefficientSet::zeros(int p, int K, int D) {
    CoefficientSet c;
    c.p = p;
    c.K = K;
    c.beta0 = Vector::Zero(D);
    c.theta0 = Matrix::Zero(K, D);
    c.B = Matrix::Zero(static_cast<Index>(p) * (K + 1), D);
    return c;
}

void CoefficientSet::check_matches(const DesignData& data) const {
    if (p != data.p() || K != data.K() || D() != data.D()) {
        throw DimensionError("coefficients are for (p=" + std::to_string(p) + ", K=" + std::to_string(K) +
                             ", D=" + std::to_string(D()) + ") but data has (p=" + std::to_string(data.p()) +
                             ", K=" + std::to_string(data.K()) + ", D=" + std::to_string(data.D()) + ")");
    }
    if (theta0.rows() != K || theta0.cols() != D() || B.rows() != static_cast<Index>(p) * (K + 1) ||
        B.cols() != D()) {
        throw DimensionError("coefficient set has inconsistent internal shapes");
    }
}

void Hyperparameters::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda3 >= 0.0)) {
        throw ValidationError("lambda values must be nonnegative");
    }
    if (!(rho_init > 0.0) || !std::isfinite(rho_init)) throw ValidationError("rho_init must be positive");
    if (!(eps_abs > 0.0) || !(eps_rel > 0.0)) throw ValidationError("eps_abs and eps_rel must be positive");
    if (max_iter < 1) throw ValidationError("max_iter must be positive");
    if (trace_every < 0) throw ValidationError("trace_every must be nonnegative");
}

RhoAdapt parse_rho_adapt(const std::string& name) {
    if (name == "fixed") return RhoAdapt::fixed;
    if (name == "paper_rule") return RhoAdapt::paper_rule;
    if (name == "residual_balance") return RhoAdapt::residual_balance;
    throw ValidationError("unknown rho adaptation rule '" + name + "'");
}

std::string to_string(RhoAdapt rule) {
    switch (rule) {
    case RhoAdapt::fixed: return "fixed";
    case RhoAdapt::paper_rule: return "paper_rule";
    case RhoAdapt::residual_balance: return "residual_balance";
    }
    return "?";
}

LinearSolver parse_linear_solver(const std::string& name) {
    if (name == "auto" || name == "automatic") return LinearSolver::automatic;
    if (name == "cholesky") return LinearSolver::cholesky;
    if (name == "woodbury") return LinearSolver::woodbury;
    if (name == "cg" || name == "conjugate_gradient") return LinearSolver::conjugate_gradient;
    throw ValidationError("unknown linear solver '" + name + "'");
}

std::string to_string(LinearSolver solver) {
    switch (solver) {
    case LinearSolver::automatic: return "auto";
    case LinearSolver::cholesky: return "cholesky";
    case LinearSolver::woodbury: return "woodbury";
    case LinearSolver::conjugate_gradient: return "cg";
    }
    return "?";
}

Matrix predict(const InteractionTensor& W, const Matrix& Z, const CoefficientSet& coef) {
    if (W.p() != coef.p || W.K() != coef.K || Z.rows() != W.N() || Z.cols() != coef.K) {
        throw DimensionError("coefficients do not match the design");
    }
    Matrix out = W.flat() * coef.B;
    out.noalias() += Z * coef.theta0;
    out.rowwise() += coef.beta0.transpose();
    return out;
}

Matrix predict(const DesignData& data, const CoefficientSet& coef) {
    coef.check_matches(data);
    return predict(InteractionTensor(data), data.Z(), coef);
}

double penalty(const CoefficientSet& coef, const Hyperparameters& hp, const TreeGroups* tree) {
    const int D = coef.D();
    const int p = coef.p;
    const int K = coef.K;
    if (tree != nullptr) {
        if (D == 1) throw ValidationError("a response tree requires D >= 2");
        if (tree->num_responses != D) throw DimensionError("tree covers a different number of responses");
    } else {
        if (D != 1) throw ValidationError("multi-response objective requires a response tree");
        if (hp.lambda1 > 0.0 || hp.lambda2 > 0.0) {
            throw ValidationError("lambda1/lambda2 are set but no response tree was given");
        }
    }

    double total = 0.0;
    for (int d = 0; d < D; ++d) {
        const auto Bd = coef.slice(d);
        for (int j = 0; j < p; ++j) {
            const double full = Bd.row(j).norm();
            const double inter = K > 0 ? Bd.row(j).tail(K).norm() : 0.0;
            const double l1 = K > 0 ? Bd.row(j).tail(K).cwiseAbs().sum() : 0.0;
            total += (1.0 - hp.alpha) * hp.lambda3 * (full + inter) + hp.alpha * hp.lambda3 * l1;
        }
    }
    if (tree == nullptr) return total;

    for (const auto& g : tree->internal) {
        for (int j = 0; j < p; ++j) {
            double sq = 0.0;
            for (int d : g.members) sq += coef.slice(d).row(j).squaredNorm();
            total += hp.lambda1 * g.weight * std::sqrt(sq);
        }
    }
    for (std::size_t d = 0; d < tree->leaves.size(); ++d) {
        const auto& g = tree->leaves[d];
        for (int j = 0; j < p; ++j) {
            double sq = 0.0;
            for (int m : g.members) sq += coef.slice(m).row(j).squaredNorm();
            total += hp.lambda2 * g.weight * std::sqrt(sq);
        }
    }
    return total;
}

double objective(const DesignData& data, const InteractionTensor& W, const CoefficientSet& coef,
                 const Hyperparameters& hp, const TreeGroups* tree) {
    coef.check_matches(data);
    const Matrix resid = data.Y() - predict(W, data.Z(), coef);
    const double loss = resid.squaredNorm() / (2.0 * data.N());
    return loss + penalty(coef, hp, tree);
}

double objective(const DesignData& data, const CoefficientSet& coef, const Hyperparameters& hp,
                 const TreeGroups* tree) {
    coef.check_matches(data);
    return objective(data, InteractionTensor(data), coef, hp, tree);
}

} // namespace mplasso
