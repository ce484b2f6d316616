#include "mplasso/prox_ops.hpp"

#include <algorithm>
#include <cmath>

namespace mplasso {

bool group_soft_threshold_inplace(std::span<double> r, double t) noexcept {
    double sq = 0.0;
    for (double v : r) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm <= t || norm == 0.0) {
        std::fill(r.begin(), r.end(), 0.0);
        return false;
    }
    const double scale = (norm - t) / norm;
    for (double& v : r) v *= scale;
    return true;
}

Vector group_soft_threshold(const Vector& r, double t) {
    Vector out = r;
    group_soft_threshold_inplace(std::span<double>(out.data(), static_cast<std::size_t>(out.size())), t);
    return out;
}

PliableExpansion build_pliable_expansion(int K) {
    if (K < 1) throw ValidationError("pliable expansion needs K >= 1");
    PliableExpansion e;
    e.K = K;
    e.G = Matrix::Zero(2 * (K + 1), K + 1);
    for (int l = 0; l <= K; ++l) e.G(l, l) = 1.0;
    for (int l = 1; l <= K; ++l) e.G(K + 1 + l, l) = 1.0;
    e.G_diag = (e.G.transpose() * e.G).diagonal();
    return e;
}

void expand_pliable(std::span<const double> b, std::span<double> out) noexcept {
    const std::size_t w = b.size();
    for (std::size_t l = 0; l < w; ++l) out[l] = b[l];
    out[w] = 0.0;
    for (std::size_t l = 1; l < w; ++l) out[w + l] = b[l];
}

void expand_pliable_transpose(std::span<const double> v, std::span<double> out) noexcept {
    const std::size_t w = out.size();
    out[0] = v[0];
    for (std::size_t l = 1; l < w; ++l) out[l] = v[l] + v[w + l];
}

ResponseExpansion build_response_expansion(std::span<const ResponseGroup> groups, int D) {
    if (D < 1) throw ValidationError("response expansion needs D >= 1");
    ResponseExpansion e;
    e.row_offset.push_back(0);
    for (const auto& g : groups) {
        if (g.members.empty()) throw ValidationError("response group is empty");
        if (!(g.weight > 0.0)) throw ValidationError("response group weight must be positive");
        for (int u : g.members) {
            if (u < 0 || u >= D) throw ValidationError("response group member out of range");
            e.row_response.push_back(u);
            e.row_weight.push_back(g.weight);
        }
        e.row_offset.push_back(static_cast<int>(e.row_response.size()));
    }
    e.I = Matrix::Zero(e.rows(), D);
    e.I_diag = Vector::Zero(D);
    for (int r = 0; r < e.rows(); ++r) {
        e.I(r, e.row_response[r]) = e.row_weight[r];
        e.I_diag(e.row_response[r]) += e.row_weight[r] * e.row_weight[r];
    }
    return e;
}

GroupExpansion build_group_expansion(int K, const TreeGroups& groups) {
    GroupExpansion e;
    e.pliable = build_pliable_expansion(K);
    e.response = build_response_expansion(groups.internal, groups.num_responses);
    e.rows_of_response.resize(groups.num_responses);
    for (int r = 0; r < e.response.rows(); ++r) e.rows_of_response[e.response.row_response[r]].push_back(r);
    if (static_cast<int>(groups.leaves.size()) != groups.num_responses) {
        throw ValidationError("tree groups need one leaf group per response");
    }
    for (const auto& leaf : groups.leaves) {
        if (!(leaf.weight > 0.0)) throw ValidationError("leaf weights must be positive");
        e.leaf_weight.push_back(leaf.weight);
    }
    return e;
}

Vector assemble_C(double rho, const Vector& G_diag, const Vector& I_diag, int p, int K, int d) {
    if (!(rho > 0.0)) throw ValidationError("rho must be positive");
    if (d < 0 || d >= I_diag.size()) throw ValidationError("response index out of range");
    if (G_diag.size() != K + 1) throw DimensionError("G_diag length must be K+1");
    const double leaf = rho * (I_diag(d) + 1.0);
    Vector c(static_cast<Index>(p) * (K + 1));
    c.head(p).setConstant(rho * (1.0 + G_diag(0)) + leaf);
    c.tail(static_cast<Index>(p) * K).setConstant(3.0 * rho + leaf);
    return c;
}

double order_free_sum(std::span<double> values) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

} // namespace mplasso
