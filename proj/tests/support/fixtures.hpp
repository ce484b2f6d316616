#pragma once

// Shared helpers for the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <vector>

#include "mplasso/core_model.hpp"
#include "mplasso/rng.hpp"
#include "mplasso/tree_groups.hpp"
#include "oracles.hpp"

namespace fixture {

using mplasso::CoefficientSet;
using mplasso::DesignData;
using mplasso::Hyperparameters;
using mplasso::Matrix;
using mplasso::TreeGroups;

inline Matrix normal_matrix(mplasso::Rng& rng, int rows, int cols) {
    Matrix M(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) M(r, c) = rng.normal();
    return M;
}

inline Matrix binary_matrix(mplasso::Rng& rng, int rows, int cols, double prob = 0.5) {
    Matrix M(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) M(r, c) = rng.bernoulli(prob) ? 1.0 : 0.0;
    return M;
}

/// Sparse pliable signal: the first `active` covariates carry main effects,
/// the first of them also interacts with the first modifier.
inline DesignData random_problem(std::uint64_t seed, int N, int p, int K, int D, int active = 2,
                                 double noise = 1.0) {
    mplasso::Rng rng(seed);
    Matrix X = normal_matrix(rng, N, p);
    Matrix Z = binary_matrix(rng, N, K);
    Matrix Y(N, D);
    for (int d = 0; d < D; ++d) {
        for (int i = 0; i < N; ++i) {
            double v = noise * rng.normal();
            for (int j = 0; j < std::min(active, p); ++j) v += (j % 2 == 0 ? 1.5 : -1.5) * X(i, j);
            v += (d % 2 == 0 ? 1.0 : -1.0) * X(i, 0) * Z(i, 0);
            Y(i, d) = v;
        }
    }
    return {X, Z, Y};
}

inline oracle::Coef to_oracle(const CoefficientSet& c) {
    oracle::Coef out(c.D(), oracle::Mat(c.p, c.K + 1));
    for (int d = 0; d < c.D(); ++d)
        for (int j = 0; j < c.p; ++j)
            for (int k = 0; k <= c.K; ++k) out[d](j, k) = c.b(j, k, d);
    return out;
}

inline oracle::Penalty to_oracle(const Hyperparameters& hp, const TreeGroups* tree) {
    oracle::Penalty pen;
    pen.lambda1 = hp.lambda1;
    pen.lambda2 = hp.lambda2;
    pen.lambda3 = hp.lambda3;
    pen.alpha = hp.alpha;
    if (tree != nullptr) {
        for (const auto& g : tree->internal) pen.internal.push_back({g.members, g.weight});
        for (const auto& g : tree->leaves) pen.leaf_weight.push_back(g.weight);
    }
    return pen;
}

inline double oracle_objective(const DesignData& data, const CoefficientSet& c, const Hyperparameters& hp,
                               const TreeGroups* tree) {
    return oracle::literal_objective(data.X(), data.Z(), data.Y(), c.beta0, c.theta0, to_oracle(c),
                                     to_oracle(hp, tree));
}

inline double relative_gap(double a, double reference) {
    return std::abs(a - reference) / std::max(std::abs(reference), 1e-12);
}

} // namespace fixture
