#pragma once

#include <span>
#include <vector>

#include "mplasso/tree_groups.hpp"
#include "mplasso/types.hpp"

namespace mplasso {

/// sign(x) * max(|x| - t, 0).
inline double soft_threshold(double x, double t) noexcept {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

/**
 * Block soft-threshold max(||r|| - t, 0) r / ||r||, applied in place.
 * A zero vector stays zero. Returns true when the result is nonzero.
 */
bool group_soft_threshold_inplace(std::span<double> r, double t) noexcept;

/// Vector form of group_soft_threshold_inplace.
Vector group_soft_threshold(const Vector& r, double t);

/**
 * Duplication matrix for the two pliable groups {beta_j, theta_j} and {theta_j}.
 *
 * G has 2(K+1) rows and K+1 columns: rows 0..K form the identity, row K+1 is
 * all zero (the excluded main effect of the second group) and rows K+2..2K+1
 * select columns 1..K. G_diag is diag(G'G) = [1, 2, ..., 2].
 */
struct PliableExpansion {
    int K = 0;
    Matrix G;
    Vector G_diag;

    int width() const noexcept { return K + 1; }
    int expanded_width() const noexcept { return 2 * (K + 1); }
};

PliableExpansion build_pliable_expansion(int K);

/// out = G * b for a length-(K+1) row b, without materializing G.
void expand_pliable(std::span<const double> b, std::span<double> out) noexcept;
/// out = G' * v for a length-2(K+1) row v.
void expand_pliable_transpose(std::span<const double> v, std::span<double> out) noexcept;

/**
 * Weighted duplication matrix for response groups: row (m,u) has w_m in
 * column u for u in G_m. Rows are ordered by group, then by member order.
 */
struct ResponseExpansion {
    Matrix I;
    Vector I_diag;                 // diag(I'I), the per-response sum of w_m^2
    std::vector<int> row_offset;   // first row of each group; size groups+1
    std::vector<int> row_response; // column u of each row
    std::vector<double> row_weight;

    int rows() const noexcept { return static_cast<int>(row_response.size()); }
};

ResponseExpansion build_response_expansion(std::span<const ResponseGroup> groups, int D);

/// Both expansions of one multi-response problem.
struct GroupExpansion {
    PliableExpansion pliable;
    ResponseExpansion response;
    std::vector<std::vector<int>> rows_of_response;  // rows (m,u) with u == d
    std::vector<double> leaf_weight;                 // w_d of the leaf groups
};

/// Pliable expansion for K plus the response expansion of the internal groups.
GroupExpansion build_group_expansion(int K, const TreeGroups& groups);

/**
 * Diagonal of C_d in stacked order (p main-effect entries, then p*K
 * interaction entries): rho(1 + G_diag[0]) + rho(I_diag[d] + 1) for the first
 * p and 3 rho + rho(I_diag[d] + 1) for the rest.
 */
Vector assemble_C(double rho, const Vector& G_diag, const Vector& I_diag, int p, int K, int d);

/// Sum of values after sorting, so the result does not depend on input order.
double order_free_sum(std::span<double> values);

} // namespace mplasso
