#include "mplasso/admm_multi.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <span>
#include <utility>

namespace mplasso {

namespace {

constexpr Index kDenseLimit = 2000;
constexpr double kCgTolerance = 1e-10;

std::span<double> seg(Matrix& m, Index col, Index offset, Index len) {
    return {m.col(col).data() + offset, static_cast<std::size_t>(len)};
}

std::span<const double> seg(const Matrix& m, Index col, Index offset, Index len) {
    return {m.col(col).data() + offset, static_cast<std::size_t>(len)};
}

LinearSolver resolve(LinearSolver choice, Index N, Index n) {
    if (choice != LinearSolver::automatic) return choice;
    if (N < n) return LinearSolver::woodbury;
    if (n <= kDenseLimit) return LinearSolver::cholesky;
    return LinearSolver::conjugate_gradient;
}

} // namespace

AdmmStateMulti AdmmStateMulti::zeros(int p, int K, int D, int group_rows, double rho) {
    const Index n = static_cast<Index>(p) * (K + 1);
    AdmmStateMulti s;
    s.B = Matrix::Zero(n, D);
    s.V = Matrix::Zero(2 * n, D);
    s.O = Matrix::Zero(2 * n, D);
    s.Q = Matrix::Zero(n, D);
    s.P = Matrix::Zero(n, D);
    s.E = RowMatrix::Zero(group_rows, n);
    s.H = RowMatrix::Zero(group_rows, n);
    s.E_tilde = Matrix::Zero(n, D);
    s.H_tilde = Matrix::Zero(n, D);
    s.rho = rho;
    return s;
}

CoefficientSolver::CoefficientSolver(std::shared_ptr<const Matrix> design, int K, LinearSolver choice)
    : design_(std::move(design)), K_(K) {
    const Matrix& W = *design_;
    if (W.cols() % (K + 1) != 0) throw DimensionError("design width is not a multiple of K+1");
    p_ = static_cast<int>(W.cols() / (K + 1));
    const double N = static_cast<double>(W.rows());
    mode_ = resolve(choice, W.rows(), W.cols());
    switch (mode_) {
    case LinearSolver::cholesky: {
        Matrix gram = Matrix::Zero(W.cols(), W.cols());
        gram.selfadjointView<Eigen::Lower>().rankUpdate(W.transpose(), 1.0 / N);
        gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
        gram_ = std::make_shared<const Matrix>(std::move(gram));
        break;
    }
    case LinearSolver::woodbury: {
        Matrix main(W.rows(), p_), inter(W.rows(), static_cast<Index>(p_) * K);
        for (int j = 0; j < p_; ++j) {
            main.col(j) = W.col(static_cast<Index>(j) * (K + 1));
            inter.middleCols(static_cast<Index>(j) * K, K) = W.middleCols(static_cast<Index>(j) * (K + 1) + 1, K);
        }
        outer_main_ = std::make_shared<const Matrix>(main * main.transpose() / N);
        outer_inter_ = std::make_shared<const Matrix>(inter * inter.transpose() / N);
        break;
    }
    case LinearSolver::conjugate_gradient:
        gram_diag_ = W.colwise().squaredNorm().transpose() / N;
        break;
    case LinearSolver::automatic:
        break;
    }
}

void CoefficientSolver::prepare(double rho, const PliableExpansion& pliable, const Vector& I_diag) {
    rho_ = rho;
    const Index n = static_cast<Index>(p_) * (K_ + 1);
    const int D = static_cast<int>(I_diag.size());
    c_.assign(D, Vector());
    for (int d = 0; d < D; ++d) {
        const Vector stacked = assemble_C(rho, pliable.G_diag, I_diag, p_, K_, d);
        Vector c(n);
        for (int j = 0; j < p_; ++j) {
            c(static_cast<Index>(j) * (K_ + 1)) = stacked(j);
            for (int k = 1; k <= K_; ++k)
                c(static_cast<Index>(j) * (K_ + 1) + k) = stacked(p_ + static_cast<Index>(j) * K_ + k - 1);
        }
        c_[d] = std::move(c);
    }
    dense_factors_.clear();
    capacitance_.clear();
    if (mode_ == LinearSolver::cholesky) {
        for (int d = 0; d < D; ++d) {
            Matrix A = *gram_;
            A.diagonal() += c_[d];
            dense_factors_.emplace_back(A);
            assert(dense_factors_.back().info() == Eigen::Success);
        }
    } else if (mode_ == LinearSolver::woodbury) {
        // C_d is constant on the main and on the interaction coordinates.
        for (int d = 0; d < D; ++d) {
            const double c_main = c_[d](0);
            const double c_inter = c_[d](1);
            Matrix S = *outer_main_ / c_main + *outer_inter_ / c_inter;
            S.diagonal().array() += 1.0;
            capacitance_.emplace_back(S);
            assert(capacitance_.back().info() == Eigen::Success);
        }
    }
}

void CoefficientSolver::solve(int d, const Vector& phi, Eigen::Ref<Vector> b) const {
    assert(rho_ > 0.0);
    const Matrix& W = *design_;
    const double N = static_cast<double>(W.rows());
    const Vector& c = c_[d];
    switch (mode_) {
    case LinearSolver::cholesky:
        b = dense_factors_[d].solve(phi);
        return;
    case LinearSolver::woodbury: {
        // (C + W'W/N)^-1 = C^-1 - C^-1 W' (N I + W C^-1 W')^-1 W C^-1, scaled by N.
        const Vector cinv_phi = phi.cwiseQuotient(c);
        const Vector u = W * cinv_phi / N;
        const Vector v = capacitance_[d].solve(u);
        b = cinv_phi - (W.transpose() * v).cwiseQuotient(c);
        return;
    }
    case LinearSolver::conjugate_gradient: {
        const Vector precond = (gram_diag_ + c).cwiseInverse();
        auto apply = [&](const Vector& x) -> Vector {
            return W.transpose() * (W * x) / N + c.cwiseProduct(x);
        };
        Vector x = b;
        Vector r = phi - apply(x);
        const double target = kCgTolerance * std::max(phi.norm(), 1e-300);
        if (r.norm() <= target) return;
        Vector z = precond.cwiseProduct(r);
        Vector q = z;
        double rz = r.dot(z);
        const Index limit = 10 * phi.size();
        for (Index it = 0; it < limit; ++it) {
            const Vector Aq = apply(q);
            const double step = rz / q.dot(Aq);
            x += step * q;
            r -= step * Aq;
            if (r.norm() <= target) break;
            z = precond.cwiseProduct(r);
            const double rz_new = r.dot(z);
            q = z + (rz_new / rz) * q;
            rz = rz_new;
        }
        b = x;
        return;
    }
    case LinearSolver::automatic:
        break;
    }
    assert(false);
}

void CoefficientSolver::solve_all(const Matrix& Phi, Matrix& B) const {
    if (mode_ != LinearSolver::woodbury) {
        for (Index d = 0; d < Phi.cols(); ++d) solve(static_cast<int>(d), Phi.col(d), B.col(d));
        return;
    }
    const Matrix& W = *design_;
    const double N = static_cast<double>(W.rows());
    Matrix cinv_phi(Phi.rows(), Phi.cols());
    for (Index d = 0; d < Phi.cols(); ++d) cinv_phi.col(d) = Phi.col(d).cwiseQuotient(c_[d]);
    Matrix U = W * cinv_phi / N;
    for (Index d = 0; d < Phi.cols(); ++d) capacitance_[d].solveInPlace(U.col(d));
    B.noalias() = W.transpose() * U;
    for (Index d = 0; d < Phi.cols(); ++d) B.col(d) = cinv_phi.col(d) - B.col(d).cwiseQuotient(c_[d]);
}

Matrix CoefficientSolver::system_matrix(int d) const {
    const Matrix& W = *design_;
    Matrix A = W.transpose() * W / static_cast<double>(W.rows());
    A.diagonal() += c_[d];
    return A;
}

WorkspaceMulti::WorkspaceMulti(Matrix design, Matrix R, int K, LinearSolver choice)
    : design_(std::make_shared<const Matrix>(std::move(design))),
      R_(std::move(R)),
      K_(K),
      solver_(design_, K, choice) {
    if (design_->rows() != R_.rows()) throw DimensionError("design and response row counts differ");
    p_ = static_cast<int>(design_->cols() / (K + 1));
    WtR_ = design_->transpose() * R_ / static_cast<double>(design_->rows());
}

RowMatrix response_copies(const Matrix& B, const GroupExpansion& expansion) {
    const auto& re = expansion.response;
    RowMatrix out(re.rows(), B.rows());
    for (int r = 0; r < re.rows(); ++r) out.row(r) = re.row_weight[r] * B.col(re.row_response[r]).transpose();
    return out;
}

Vector coefficient_rhs(const AdmmStateMulti& state, const WorkspaceMulti& ws, int d, const GroupExpansion& expansion) {
    const int K = ws.K();
    const Index w = K + 1;
    const double rho = state.rho;
    Vector phi = ws.WtR().col(d);
    Vector acc = state.Q.col(d) - state.P.col(d) + state.E_tilde.col(d) - state.H_tilde.col(d);
    for (int r : expansion.rows_of_response[d]) {
        acc += expansion.response.row_weight[r] * (state.E.row(r) - state.H.row(r)).transpose();
    }
    const Vector vo = state.V.col(d) - state.O.col(d);
    Vector gt(w);
    for (int j = 0; j < ws.p(); ++j) {
        expand_pliable_transpose({vo.data() + 2 * w * j, static_cast<std::size_t>(2 * w)}, {gt.data(), static_cast<std::size_t>(w)});
        acc.segment(w * j, w) += gt;
    }
    phi += rho * acc;
    return phi;
}

Matrix coefficient_rhs_all(const AdmmStateMulti& state, const WorkspaceMulti& ws, const GroupExpansion& expansion) {
    const Index w = ws.K() + 1;
    const auto& re = expansion.response;
    Matrix acc = state.Q - state.P + state.E_tilde - state.H_tilde;
    for (int r = 0; r < re.rows(); ++r)
        acc.col(re.row_response[r]) += re.row_weight[r] * (state.E.row(r) - state.H.row(r)).transpose();
    const Matrix vo = state.V - state.O;
    Vector gt(w);
    for (Index d = 0; d < acc.cols(); ++d) {
        for (Index j = 0; j < ws.p(); ++j) {
            expand_pliable_transpose(seg(vo, d, 2 * w * j, 2 * w), {gt.data(), static_cast<std::size_t>(w)});
            acc.col(d).segment(w * j, w) += gt;
        }
    }
    return ws.WtR() + state.rho * acc;
}

void update_B(AdmmStateMulti& state, WorkspaceMulti& ws, const GroupExpansion& expansion) {
    assert(ws.solver().prepared_for(state.rho));
    const Matrix Phi = coefficient_rhs_all(state, ws, expansion);
    ws.solver().solve_all(Phi, state.B);
}

void update_B_d(AdmmStateMulti& state, WorkspaceMulti& ws, int d, const GroupExpansion& expansion) {
    assert(ws.solver().prepared_for(state.rho));
    const Vector phi = coefficient_rhs(state, ws, d, expansion);
    ws.solver().solve(d, phi, state.B.col(d));
}

void update_V_multi(AdmmStateMulti& state, int K, double lambda3, double alpha) {
    const Index w = K + 1;
    const Index p = state.B.rows() / w;
    const double t = (1.0 - alpha) * lambda3 / state.rho;
    for (Index d = 0; d < state.B.cols(); ++d) {
        for (Index j = 0; j < p; ++j) {
            expand_pliable(seg(std::as_const(state.B), d, w * j, w), seg(state.V, d, 2 * w * j, 2 * w));
            state.V.col(d).segment(2 * w * j, 2 * w) += state.O.col(d).segment(2 * w * j, 2 * w);
            group_soft_threshold_inplace(seg(state.V, d, 2 * w * j, w), t);
            group_soft_threshold_inplace(seg(state.V, d, 2 * w * j + w, w), t);
        }
    }
}

void update_Q_multi(AdmmStateMulti& state, int K, double lambda3, double alpha) {
    const Index w = K + 1;
    const double t = alpha * lambda3 / state.rho;
    for (Index d = 0; d < state.B.cols(); ++d) {
        for (Index i = 0; i < state.B.rows(); ++i) {
            const double v = state.B(i, d) + state.P(i, d);
            state.Q(i, d) = (i % w == 0) ? v : soft_threshold(v, t);
        }
    }
}

void update_E(AdmmStateMulti& state, int K, const GroupExpansion& expansion, double lambda1) {
    update_E(state, K, expansion, lambda1, response_copies(state.B, expansion));
}

void update_E(AdmmStateMulti& state, int K, const GroupExpansion& expansion, double lambda1, const RowMatrix& copies) {
    const auto& re = expansion.response;
    const Index w = K + 1;
    const Index p = state.B.rows() / w;
    const double t = lambda1 / state.rho;
    state.E = copies + state.H;
    const int groups = static_cast<int>(re.row_offset.size()) - 1;
    for (int m = 0; m < groups; ++m) {
        const int first = re.row_offset[m];
        const int rows = re.row_offset[m + 1] - first;
        for (Index j = 0; j < p; ++j) {
            auto block = state.E.block(first, w * j, rows, w);
            const double norm = block.norm();
            if (norm <= t || norm == 0.0) {
                block.setZero();
            } else {
                block *= (norm - t) / norm;
            }
        }
    }
}

void update_E_tilde(AdmmStateMulti& state, int K, const GroupExpansion& expansion, double lambda2) {
    const Index w = K + 1;
    const Index p = state.B.rows() / w;
    state.E_tilde = state.B + state.H_tilde;
    for (Index d = 0; d < state.B.cols(); ++d) {
        const double t = lambda2 * expansion.leaf_weight[d] / state.rho;
        for (Index j = 0; j < p; ++j) group_soft_threshold_inplace(seg(state.E_tilde, d, w * j, w), t);
    }
}

void update_multipliers_multi(AdmmStateMulti& state, int K, const GroupExpansion& expansion) {
    update_multipliers_multi(state, K, response_copies(state.B, expansion));
}

void update_multipliers_multi(AdmmStateMulti& state, int K, const RowMatrix& copies) {
    const Index w = K + 1;
    const Index p = state.B.rows() / w;
    state.P += state.B - state.Q;
    state.H_tilde += state.B - state.E_tilde;
    state.H += copies - state.E;
    Vector gb(2 * w);
    for (Index d = 0; d < state.B.cols(); ++d) {
        for (Index j = 0; j < p; ++j) {
            expand_pliable(seg(std::as_const(state.B), d, w * j, w), {gb.data(), static_cast<std::size_t>(gb.size())});
            state.O.col(d).segment(2 * w * j, 2 * w) += gb - state.V.col(d).segment(2 * w * j, 2 * w);
        }
    }
}

namespace {

struct Norms {
    double primal_sq = 0.0;
    double lhs_sq = 0.0;
    double rhs_sq = 0.0;
    double dual_sq = 0.0;
};

/// Multiplier step fused with the residual norms; the increments are the primal residuals.
Norms step_multipliers(AdmmStateMulti& s, int K, const RowMatrix& copies) {
    Norms n;
    const Index w = K + 1;
    const Index p = s.B.rows() / w;
    Vector gb(2 * w);
    for (Index d = 0; d < s.B.cols(); ++d) {
        for (Index j = 0; j < p; ++j) {
            expand_pliable(seg(std::as_const(s.B), d, w * j, w), {gb.data(), static_cast<std::size_t>(gb.size())});
            auto o = s.O.col(d).segment(2 * w * j, 2 * w);
            gb -= s.V.col(d).segment(2 * w * j, 2 * w);
            n.primal_sq += gb.squaredNorm();
            o += gb;
        }
    }
    Matrix diff = s.B - s.Q;
    n.primal_sq += diff.squaredNorm();
    s.P += diff;
    diff = s.B - s.E_tilde;
    n.primal_sq += diff.squaredNorm();
    s.H_tilde += diff;
    const RowMatrix cdiff = copies - s.E;
    n.primal_sq += cdiff.squaredNorm();
    s.H += cdiff;
    // G B stacks every coefficient once per pliable group: main effects once, interactions twice.
    for (Index d = 0; d < s.B.cols(); ++d)
        for (Index j = 0; j < p; ++j)
            n.lhs_sq += s.B(w * j, d) * s.B(w * j, d) + 2.0 * s.B.col(d).segment(w * j + 1, K).squaredNorm();
    n.lhs_sq += 2.0 * s.B.squaredNorm() + copies.squaredNorm();
    n.rhs_sq = s.V.squaredNorm() + s.Q.squaredNorm() + s.E.squaredNorm() + s.E_tilde.squaredNorm();
    n.dual_sq = s.O.squaredNorm() + s.P.squaredNorm() + s.H.squaredNorm() + s.H_tilde.squaredNorm();
    return n;
}

/// B with every coordinate zeroed whose auxiliary copies were thresholded to zero.
Matrix sparse_coefficients(const AdmmStateMulti& s, int K, const GroupExpansion& expansion) {
    const Index w = K + 1;
    const Index p = s.B.rows() / w;
    const Index D = s.B.cols();
    const auto& re = expansion.response;
    const int groups = static_cast<int>(re.row_offset.size()) - 1;
    // tree_alive(j, d): every internal block over a group containing d survived at j.
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> tree_alive =
        Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(p, D, true);
    for (int m = 0; m < groups; ++m) {
        const int first = re.row_offset[m];
        const int rows = re.row_offset[m + 1] - first;
        for (Index j = 0; j < p; ++j) {
            if (!s.E.block(first, w * j, rows, w).isZero(0.0)) continue;
            for (int r = first; r < first + rows; ++r) tree_alive(j, re.row_response[r]) = false;
        }
    }
    Matrix out = Matrix::Zero(s.B.rows(), D);
    for (Index d = 0; d < D; ++d) {
        for (Index j = 0; j < p; ++j) {
            if (!tree_alive(j, d)) continue;
            if (s.E_tilde.col(d).segment(w * j, w).isZero(0.0)) continue;
            if (s.V.col(d).segment(2 * w * j, w).isZero(0.0)) continue;
            out(w * j, d) = s.B(w * j, d);
            if (s.V.col(d).segment(2 * w * j + w, w).isZero(0.0)) continue;
            for (Index k = 1; k < w; ++k)
                if (s.Q(w * j + k, d) != 0.0) out(w * j + k, d) = s.B(w * j + k, d);
        }
    }
    return out;
}

} // namespace

MultiResponseProblem::MultiResponseProblem(const DesignData& data, TreeGroups groups, LinearSolver choice)
    : data_(data),
      groups_(std::move(groups)),
      expansion_(build_group_expansion(data.K(), groups_)),
      tensor_(data),
      profile_(data.Z()),
      workspace_(profile_.project(tensor_.flat()), profile_.project(data.Y()), data.K(), choice) {
    if (data.D() < 2) throw ValidationError("multi-response fit needs D >= 2");
    if (groups_.num_responses != data.D()) throw ValidationError("tree does not cover the response columns");
}

MultiFit MultiResponseProblem::solve(const Hyperparameters& hp, const AdmmStateMulti* warm) const {
    hp.validate();
    const int p = data_.p();
    const int K = data_.K();
    const int D = data_.D();
    const int R = expansion_.response.rows();

    AdmmStateMulti state = warm ? *warm : AdmmStateMulti::zeros(p, K, D, R, hp.rho_init);
    if (state.B.rows() != static_cast<Index>(p) * (K + 1) || state.B.cols() != D || state.E.rows() != R) {
        throw DimensionError("warm start has the wrong shape");
    }
    state.iter = 0;
    WorkspaceMulti ws = workspace_;
    if (hp.linear_solver != LinearSolver::automatic && hp.linear_solver != ws.solver().mode()) {
        ws = WorkspaceMulti(ws.design(), ws.R(), K, hp.linear_solver);
    }
    ws.solver().prepare(state.rho, expansion_.pliable, expansion_.response.I_diag);

    ConvergenceReport report;
    const double n = static_cast<double>(p) * (K + 1);
    const double dim = n * (4.0 * D + R);
    const double N = static_cast<double>(data_.N());
    Matrix V_prev, Q_prev, Et_prev;
    RowMatrix E_prev;

    for (int it = 1; it <= hp.max_iter; ++it) {
        update_B(state, ws, expansion_);
        V_prev = state.V;
        Q_prev = state.Q;
        E_prev = state.E;
        Et_prev = state.E_tilde;
        update_V_multi(state, K, hp.lambda3, hp.alpha);
        update_Q_multi(state, K, hp.lambda3, hp.alpha);
        const RowMatrix copies = response_copies(state.B, expansion_);
        update_E(state, K, expansion_, hp.lambda1, copies);
        update_E_tilde(state, K, expansion_, hp.lambda2);
        const Norms nm = step_multipliers(state, K, copies);
        state.r_norm = std::sqrt(nm.primal_sq);
        state.s_norm = state.rho * std::sqrt((state.V - V_prev).squaredNorm() + (state.Q - Q_prev).squaredNorm() +
                                             (state.E - E_prev).squaredNorm() +
                                             (state.E_tilde - Et_prev).squaredNorm());
        state.iter = it;
        const Tolerances tol =
            stopping_tolerances(dim, std::sqrt(nm.lhs_sq), std::sqrt(nm.rhs_sq), state.rho * std::sqrt(nm.dual_sq), hp);
        report.iterations = it;
        report.r_norm = state.r_norm;
        report.s_norm = state.s_norm;
        report.eps_pri = tol.eps_pri;
        report.eps_dual = tol.eps_dual;

        if (hp.trace_every > 0 && (it % hp.trace_every == 0 || it == 1)) {
            CoefficientSet c = CoefficientSet::zeros(p, K, D);
            c.B = state.B;
            const double loss = (ws.R() - ws.design() * state.B).squaredNorm() / (2.0 * N);
            report.trace_iterations.push_back(it);
            report.objective_trace.push_back(loss + penalty(c, hp, &groups_));
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
            state.H *= scale;
            state.H_tilde *= scale;
            state.rho = rho;
            ws.solver().prepare(rho, expansion_.pliable, expansion_.response.I_diag);
            ++report.rho_changes;
        }
    }
    report.rho = state.rho;

    MultiFit fit;
    fit.coef = CoefficientSet::zeros(p, K, D);
    fit.coef.B = sparse_coefficients(state, K, expansion_);
    const Matrix resid = data_.Y() - tensor_.flat() * fit.coef.B;
    const Matrix icpt = profile_.intercepts(resid);
    fit.coef.beta0 = icpt.row(0).transpose();
    fit.coef.theta0 = icpt.bottomRows(K);
    if (hp.trace_every > 0) {
        report.trace_iterations.push_back(report.iterations);
        report.objective_trace.push_back(objective(data_, tensor_, fit.coef, hp, &groups_));
    }
    fit.report = std::move(report);
    fit.state = std::move(state);
    return fit;
}

MultiFit fit_multi(const DesignData& data, const Hyperparameters& hp, const TreeGroups& groups,
                   const AdmmStateMulti* warm) {
    return MultiResponseProblem(data, groups, hp.linear_solver).solve(hp, warm);
}

} // namespace mplasso
