#include <doctest.h>

#include "fixtures.hpp"
#include "mplasso/admm_single.hpp"
#include "mplasso/prox_ops.hpp"

using namespace mplasso;

namespace {

AdmmStateSingle random_state(Rng& rng, int p, int K, double rho) {
    AdmmStateSingle s = AdmmStateSingle::zeros(p, K, rho);
    s.B = fixture::normal_matrix(rng, p, K + 1);
    s.V = fixture::normal_matrix(rng, p, 2 * (K + 1));
    s.O = fixture::normal_matrix(rng, p, 2 * (K + 1));
    s.Q = fixture::normal_matrix(rng, p, K + 1);
    s.P = fixture::normal_matrix(rng, p, K + 1);
    return s;
}

} // namespace

TEST_CASE("B_j update") {
    SUBCASE("zero right-hand side gives zero") {
        const DesignData data = fixture::random_problem(1, 10, 3, 2, 1);
        const InteractionTensor W(data);
        WorkspaceSingle ws(W.flat(), Vector::Zero(10), 2);
        ws.factorize(1.0);
        AdmmStateSingle s = AdmmStateSingle::zeros(3, 2, 1.0);
        ws.reset_residual(s.B);
        for (int j = 0; j < 3; ++j) CHECK(update_B_j(s, ws, j).isZero(0.0));
    }
    SUBCASE("N = 1, K = 1 against the hand-solved 2x2 system") {
        // w = (x, x z) = (2, 6), y = 5, rho = 1, all auxiliaries zero:
        // (w w' + diag(2, 3)) b = w y
        Matrix design(1, 2);
        design << 2.0, 6.0;
        Vector y(1);
        y << 5.0;
        WorkspaceSingle ws(design, y, 1);
        ws.factorize(1.0);
        AdmmStateSingle s = AdmmStateSingle::zeros(1, 1, 1.0);
        ws.reset_residual(s.B);
        const Vector b = update_B_j(s, ws, 0);
        // det = (4+2)(36+3) - 144 = 90; b = adj * (10, 30) / det
        CHECK(b(0) == doctest::Approx((39.0 * 10.0 - 12.0 * 30.0) / 90.0));
        CHECK(b(1) == doctest::Approx((-12.0 * 10.0 + 6.0 * 30.0) / 90.0));
    }
    SUBCASE("plug-back residual and positive definiteness") {
        Rng rng(2);
        const DesignData data = fixture::random_problem(2, 25, 4, 3, 1);
        const InteractionTensor W(data);
        const double rho = 0.7;
        WorkspaceSingle ws(W.flat(), data.Y().col(0), 3);
        ws.factorize(rho);
        AdmmStateSingle s = random_state(rng, 4, 3, rho);
        ws.reset_residual(s.B);
        for (int j = 0; j < 4; ++j) {
            const Matrix A = ws.system_matrix(j);
            CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(A).eigenvalues().minCoeff() >= rho * (1 - 1e-12));
            const Vector r_minus_j = ws.residual() + W.slab(j) * s.B.row(j).transpose();
            const Vector b = update_B_j(s, ws, j);
            const PliableExpansion G = build_pliable_expansion(3);
            const Vector rhs = W.slab(j).transpose() * r_minus_j / 25.0 +
                               rho * (G.G.transpose() * (s.V.row(j) - s.O.row(j)).transpose() +
                                      (s.Q.row(j) - s.P.row(j)).transpose());
            CHECK((A * b - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
            const Vector expect_resid = r_minus_j - W.slab(j) * b;
            CHECK((ws.residual() - expect_resid).norm() < 1e-10);
        }
    }
}

TEST_CASE("V, Q and multiplier updates") {
    Rng rng(3);
    const int p = 4, K = 3;
    SUBCASE("alpha one passes V through") {
        AdmmStateSingle s = random_state(rng, p, K, 1.3);
        const AdmmStateSingle before = s;
        update_V(s, 2.0, 1.0);
        const PliableExpansion G = build_pliable_expansion(K);
        for (int j = 0; j < p; ++j) {
            const Vector expect = G.G * before.B.row(j).transpose() + before.O.row(j).transpose();
            CHECK((s.V.row(j).transpose() - expect).norm() < 1e-14);
        }
    }
    SUBCASE("sub-threshold groups vanish") {
        AdmmStateSingle s = random_state(rng, p, K, 1.0);
        s.B *= 1e-3;
        s.O *= 1e-3;
        update_V(s, 10.0, 0.0);
        CHECK(s.V.isZero(0.0));
    }
    SUBCASE("V matches the composition oracle") {
        AdmmStateSingle s = random_state(rng, p, K, 0.8);
        const AdmmStateSingle before = s;
        const double lambda = 1.1, alpha = 0.4;
        update_V(s, lambda, alpha);
        const PliableExpansion G = build_pliable_expansion(K);
        for (int j = 0; j < p; ++j) {
            const Vector z = G.G * before.B.row(j).transpose() + before.O.row(j).transpose();
            const Vector g1 = group_soft_threshold(z.head(K + 1), (1 - alpha) * lambda / 0.8);
            const Vector g2 = group_soft_threshold(z.tail(K + 1), (1 - alpha) * lambda / 0.8);
            CHECK((s.V.row(j).head(K + 1).transpose() - g1).norm() < 1e-14);
            CHECK((s.V.row(j).tail(K + 1).transpose() - g2).norm() < 1e-14);
        }
    }
    SUBCASE("Q rules") {
        AdmmStateSingle s = random_state(rng, p, K, 0.9);
        AdmmStateSingle t = s;
        update_Q(s, 3.0, 0.0);
        CHECK((s.Q - (t.B + t.P)).norm() == 0.0);
        update_Q(t, 1.7, 0.6);
        for (int j = 0; j < p; ++j) {
            CHECK(t.Q(j, 0) == t.B(j, 0) + t.P(j, 0));
            for (int k = 1; k <= K; ++k) CHECK(t.Q(j, k) == soft_threshold(t.B(j, k) + t.P(j, k), 0.6 * 1.7 / 0.9));
        }
    }
    SUBCASE("multipliers") {
        AdmmStateSingle s = random_state(rng, p, K, 1.0);
        const PliableExpansion G = build_pliable_expansion(K);
        s.Q = s.B;
        for (int j = 0; j < p; ++j) s.V.row(j) = (G.G * s.B.row(j).transpose()).transpose();
        const AdmmStateSingle feasible = s;
        for (int it = 0; it < 10; ++it) update_multipliers(s);
        CHECK(s.P == feasible.P);
        CHECK(s.O == feasible.O);

        AdmmStateSingle z = AdmmStateSingle::zeros(p, K, 1.0);
        z.O.setZero();
        const RowMatrix delta = fixture::normal_matrix(rng, p, K + 1);
        z.B = z.Q + delta;
        for (int j = 0; j < p; ++j) z.V.row(j) = (G.G * z.B.row(j).transpose()).transpose();
        update_multipliers(z);
        CHECK((z.P - delta).norm() < 1e-15);
    }
}

TEST_CASE("single-response fits") {
    SUBCASE("zero response") {
        DesignData base = fixture::random_problem(4, 20, 3, 2, 1);
        const DesignData data(base.X(), base.Z(), Matrix::Zero(20, 1));
        Hyperparameters hp;
        hp.lambda3 = 0.5;
        const SingleFit fit = fit_single(data, hp);
        CHECK(fit.report.converged);
        CHECK(fit.report.iterations <= 2);
        CHECK(fit.coef.B.isZero(0.0));
    }
    SUBCASE("matches the oracle on random instances") {
        for (std::uint64_t seed = 10; seed < 13; ++seed) {
            const DesignData data = fixture::random_problem(seed, 30, 5, 3, 1, 3);
            Hyperparameters hp;
            hp.lambda3 = 0.3;
            hp.alpha = 0.5;
            const SingleFit fit = fit_single(data, hp);
            REQUIRE(fit.report.converged);
            const auto ref = oracle::minimize(data.X(), data.Z(), data.Y(), fixture::to_oracle(hp, nullptr));
            const double mine = fixture::oracle_objective(data, fit.coef, hp, nullptr);
            CHECK(fixture::relative_gap(mine, ref.objective) < 1e-4);
            CHECK(mine <= fixture::oracle_objective(data, CoefficientSet::zeros(5, 3, 1), hp, nullptr));
            CHECK(fit.report.r_norm <= fit.report.eps_pri);
            CHECK(fit.report.s_norm <= fit.report.eps_dual);
        }
    }
    SUBCASE("rho invariance with a fixed rho") {
        const DesignData data = fixture::random_problem(20, 30, 4, 2, 1, 3);
        Hyperparameters hp;
        hp.lambda3 = 0.25;
        hp.rho_adapt = RhoAdapt::fixed;
        const SingleFit a = fit_single(data, hp);
        hp.rho_init = 2.0;
        const SingleFit b = fit_single(data, hp);
        REQUIRE(a.report.converged);
        REQUIRE(b.report.converged);
        CHECK(fixture::relative_gap(objective(data, b.coef, hp, nullptr), objective(data, a.coef, hp, nullptr)) < 1e-4);
    }
    SUBCASE("paper rho rule") {
        // rho > 10 s doubles rho every step once s is small, so the run stops on a collapsed primal residual
        const DesignData data = fixture::random_problem(21, 30, 4, 2, 1, 3);
        Hyperparameters hp;
        hp.lambda3 = 0.25;
        hp.rho_adapt = RhoAdapt::paper_rule;
        const SingleFit fit = fit_single(data, hp);
        CHECK(fit.report.converged);
        CHECK(fit.report.rho > 1e6);
        hp.rho_adapt = RhoAdapt::residual_balance;
        const SingleFit ref = fit_single(data, hp);
        const double gap = fixture::relative_gap(objective(data, fit.coef, hp, nullptr),
                                                 objective(data, ref.coef, hp, nullptr));
        CHECK(gap < 0.05);
        CHECK(objective(data, fit.coef, hp, nullptr) >= objective(data, ref.coef, hp, nullptr) - 1e-9);
    }
    SUBCASE("non-convergence is flagged") {
        const DesignData data = fixture::random_problem(22, 30, 4, 2, 1, 3);
        Hyperparameters hp;
        hp.lambda3 = 0.1;
        hp.max_iter = 2;
        const SingleFit fit = fit_single(data, hp);
        CHECK_FALSE(fit.report.converged);
        CHECK(fit.report.iterations == 2);
    }
    SUBCASE("multi-response data is rejected") {
        Hyperparameters hp;
        CHECK_THROWS(fit_single(fixture::random_problem(1, 10, 2, 2, 2), hp));
    }
}
