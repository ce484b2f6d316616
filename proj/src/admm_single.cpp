#include "mplasso/admm_single.hpp"

#include <cassert>
#include <cmath>
#include <span>

#include "mplasso/prox_ops.hpp"

namespace mplasso {

namespace {

std::span<double> row_span(RowMatrix& m, Index r, Index offset, Index len) {
    return {m.row(r).data() + offset, static_cast<std::size_t>(len)};
}

} // namespace

AdmmStateSingle AdmmStateSingle::zeros(int p, int K, double rho) {
    AdmmStateSingle s;
    s.B = RowMatrix::Zero(p, K + 1);
    s.V = RowMatrix::Zero(p, 2 * (K + 1));
    s.O = RowMatrix::Zero(p, 2 * (K + 1));
    s.Q = RowMatrix::Zero(p, K + 1);
    s.P = RowMatrix::Zero(p, K + 1);
    s.rho = rho;
    return s;
}

WorkspaceSingle::WorkspaceSingle(Matrix design, Vector y_tilde, int K) : y_tilde_(std::move(y_tilde)), K_(K) {
    if (K < 1) throw ValidationError("workspace needs K >= 1");
    if (design.cols() % (K + 1) != 0) throw DimensionError("design width is not a multiple of K+1");
    if (design.rows() != y_tilde_.size()) throw DimensionError("design and response lengths differ");
    p_ = static_cast<int>(design.cols() / (K + 1));
    const double N = static_cast<double>(design.rows());
    auto gram = std::make_shared<std::vector<Matrix>>();
    gram->reserve(p_);
    for (int j = 0; j < p_; ++j) {
        const auto Wj = design.middleCols(static_cast<Index>(j) * (K + 1), K + 1);
        gram->push_back(Wj.transpose() * Wj / N);
    }
    gram_ = std::move(gram);
    design_ = std::make_shared<const Matrix>(std::move(design));
    residual_ = y_tilde_;
}

Matrix WorkspaceSingle::system_matrix(int j) const {
    Matrix A = (*gram_)[j];
    // diag(G'G) = [1, 2, ..., 2]; plus the identity from the Q copy.
    A(0, 0) += 2.0 * factor_rho_;
    for (int k = 1; k <= K_; ++k) A(k, k) += 3.0 * factor_rho_;
    return A;
}

void WorkspaceSingle::factorize(double rho) {
    assert(rho > 0.0);
    factor_rho_ = rho;
    factors_.clear();
    factors_.reserve(p_);
    for (int j = 0; j < p_; ++j) {
        factors_.emplace_back(system_matrix(j));
        assert(factors_.back().info() == Eigen::Success);
    }
}

void WorkspaceSingle::reset_residual(const RowMatrix& B) {
    const Eigen::Map<const Vector> b(B.data(), B.size());
    residual_ = y_tilde_ - (*design_) * b;
}

Vector update_B_j(AdmmStateSingle& state, WorkspaceSingle& ws, int j) {
    assert(ws.factorized_for(state.rho));
    const int K = ws.K_;
    const double rho = state.rho;
    const auto Wj = ws.design_->middleCols(static_cast<Index>(j) * (K + 1), K + 1);
    Vector bj = state.B.row(j).transpose();
    ws.residual_.noalias() += Wj * bj;  // residual now r_(-j)

    Vector rhs = Wj.transpose() * ws.residual_ / static_cast<double>(ws.N());
    Vector vo = (state.V.row(j) - state.O.row(j)).transpose();
    Vector gt(K + 1);
    expand_pliable_transpose({vo.data(), static_cast<std::size_t>(vo.size())},
                             {gt.data(), static_cast<std::size_t>(gt.size())});
    rhs += rho * (gt + (state.Q.row(j) - state.P.row(j)).transpose());

    bj = ws.factors_[j].solve(rhs);
    state.B.row(j) = bj.transpose();
    ws.residual_.noalias() -= Wj * bj;
    return bj;
}

void update_V(AdmmStateSingle& state, double lambda, double alpha) {
    const int K = state.K();
    const Index w = K + 1;
    const double t = (1.0 - alpha) * lambda / state.rho;
    for (Index j = 0; j < state.B.rows(); ++j) {
        expand_pliable({state.B.row(j).data(), static_cast<std::size_t>(w)}, row_span(state.V, j, 0, 2 * w));
        state.V.row(j) += state.O.row(j);
        group_soft_threshold_inplace(row_span(state.V, j, 0, w), t);
        group_soft_threshold_inplace(row_span(state.V, j, w, w), t);
    }
}

void update_Q(AdmmStateSingle& state, double lambda, double alpha) {
    const double t = alpha * lambda / state.rho;
    for (Index j = 0; j < state.B.rows(); ++j) {
        state.Q(j, 0) = state.B(j, 0) + state.P(j, 0);
        for (Index k = 1; k < state.B.cols(); ++k) state.Q(j, k) = soft_threshold(state.B(j, k) + state.P(j, k), t);
    }
}

void update_multipliers(AdmmStateSingle& state) {
    const Index w = state.B.cols();
    state.P += state.B - state.Q;
    Vector gb(2 * w);
    for (Index j = 0; j < state.B.rows(); ++j) {
        expand_pliable({state.B.row(j).data(), static_cast<std::size_t>(w)},
                       {gb.data(), static_cast<std::size_t>(gb.size())});
        state.O.row(j) += gb.transpose() - state.V.row(j);
    }
}

namespace {

struct Norms {
    double primal_sq = 0.0;   // ||GB - V||^2 + ||B - Q||^2
    double lhs_sq = 0.0;      // ||GB||^2 + ||B||^2
    double rhs_sq = 0.0;      // ||V||^2 + ||Q||^2
    double dual_sq = 0.0;     // ||O||^2 + ||P||^2
};

Norms residual_norms(const AdmmStateSingle& s) {
    Norms n;
    const Index w = s.B.cols();
    Vector gb(2 * w);
    for (Index j = 0; j < s.B.rows(); ++j) {
        expand_pliable({s.B.row(j).data(), static_cast<std::size_t>(w)}, {gb.data(), static_cast<std::size_t>(gb.size())});
        n.primal_sq += (gb.transpose() - s.V.row(j)).squaredNorm();
        n.lhs_sq += gb.squaredNorm();
    }
    n.primal_sq += (s.B - s.Q).squaredNorm();
    n.lhs_sq += s.B.squaredNorm();
    n.rhs_sq = s.V.squaredNorm() + s.Q.squaredNorm();
    n.dual_sq = s.O.squaredNorm() + s.P.squaredNorm();
    return n;
}

/// B with every coordinate zeroed whose auxiliary copy was thresholded to zero.
RowMatrix sparse_coefficients(const AdmmStateSingle& s) {
    RowMatrix out = RowMatrix::Zero(s.B.rows(), s.B.cols());
    const Index w = s.B.cols();
    for (Index j = 0; j < s.B.rows(); ++j) {
        const bool full_alive = !s.V.row(j).head(w).isZero(0.0);
        if (!full_alive) continue;
        out(j, 0) = s.B(j, 0);
        const bool inter_alive = !s.V.row(j).tail(w).isZero(0.0);
        if (!inter_alive) continue;
        for (Index k = 1; k < w; ++k)
            if (s.Q(j, k) != 0.0) out(j, k) = s.B(j, k);
    }
    return out;
}

double pliable_penalty(const RowMatrix& B, double lambda, double alpha) {
    const Index K = B.cols() - 1;
    double total = 0.0;
    for (Index j = 0; j < B.rows(); ++j) {
        total += (1.0 - alpha) * lambda * (B.row(j).norm() + B.row(j).tail(K).norm()) +
                 alpha * lambda * B.row(j).tail(K).cwiseAbs().sum();
    }
    return total;
}

} // namespace

SingleResponseProblem::SingleResponseProblem(const DesignData& data)
    : data_(data),
      tensor_(data),
      profile_(data.Z()),
      workspace_(profile_.project(tensor_.flat()), profile_.project(data.Y().col(0)), data.K()) {
    if (data.D() != 1) throw ValidationError("single-response fit needs D == 1");
}

SingleFit SingleResponseProblem::solve(const Hyperparameters& hp, const AdmmStateSingle* warm) const {
    hp.validate();
    if (hp.lambda1 > 0.0 || hp.lambda2 > 0.0) {
        throw ValidationError("single-response fit uses lambda3 only; lambda1/lambda2 must be 0");
    }
    const int p = data_.p();
    const int K = data_.K();
    const double lambda = hp.lambda3;
    const double alpha = hp.alpha;

    AdmmStateSingle state = warm ? *warm : AdmmStateSingle::zeros(p, K, hp.rho_init);
    if (state.B.rows() != p || state.B.cols() != K + 1) throw DimensionError("warm start has the wrong shape");
    state.iter = 0;
    WorkspaceSingle ws = workspace_;
    ws.factorize(state.rho);

    ConvergenceReport report;
    const double dim = static_cast<double>(p) * 3.0 * (K + 1);
    const double N = static_cast<double>(data_.N());
    RowMatrix V_prev, Q_prev;

    for (int it = 1; it <= hp.max_iter; ++it) {
        ws.reset_residual(state.B);
        for (int j = 0; j < p; ++j) update_B_j(state, ws, j);
        V_prev = state.V;
        Q_prev = state.Q;
        update_V(state, lambda, alpha);
        update_Q(state, lambda, alpha);
        update_multipliers(state);

        const Norms n = residual_norms(state);
        state.r_norm = std::sqrt(n.primal_sq);
        state.s_norm = state.rho * std::sqrt((state.V - V_prev).squaredNorm() + (state.Q - Q_prev).squaredNorm());
        state.iter = it;
        const Tolerances tol =
            stopping_tolerances(dim, std::sqrt(n.lhs_sq), std::sqrt(n.rhs_sq), state.rho * std::sqrt(n.dual_sq), hp);
        report.iterations = it;
        report.r_norm = state.r_norm;
        report.s_norm = state.s_norm;
        report.eps_pri = tol.eps_pri;
        report.eps_dual = tol.eps_dual;

        if (hp.trace_every > 0 && (it % hp.trace_every == 0 || it == 1)) {
            report.trace_iterations.push_back(it);
            report.objective_trace.push_back(ws.residual().squaredNorm() / (2.0 * N) +
                                             pliable_penalty(state.B, lambda, alpha));
        }
        if (state.r_norm <= tol.eps_pri && state.s_norm <= tol.eps_dual) {
            report.converged = true;
            break;
        }
        const double rho = next_rho(hp.rho_adapt, state.rho, state.r_norm, state.s_norm);
        if (rho != state.rho) {
            const double scale = state.rho / rho;
            state.O *= scale;
            state.P *= scale;
            state.rho = rho;
            ws.factorize(rho);
            ++report.rho_changes;
        }
    }
    report.rho = state.rho;

    SingleFit fit;
    fit.coef = CoefficientSet::zeros(p, K, 1);
    const RowMatrix sparse = sparse_coefficients(state);
    fit.coef.B.col(0) = Eigen::Map<const Vector>(sparse.data(), sparse.size());
    const Matrix resid = data_.Y() - tensor_.flat() * fit.coef.B;
    const Matrix icpt = profile_.intercepts(resid);
    fit.coef.beta0(0) = icpt(0, 0);
    fit.coef.theta0.col(0) = icpt.col(0).tail(K);
    if (hp.trace_every > 0) {
        report.trace_iterations.push_back(report.iterations);
        report.objective_trace.push_back(objective(data_, tensor_, fit.coef, hp, nullptr));
    }
    fit.report = std::move(report);
    fit.state = std::move(state);
    return fit;
}

SingleFit fit_single(const DesignData& data, const Hyperparameters& hp, const AdmmStateSingle* warm) {
    return SingleResponseProblem(data).solve(hp, warm);
}

} // namespace mplasso
