#include "mplasso/simgen.hpp"

#include <algorithm>

#include "mplasso/rng.hpp"

namespace mplasso {

namespace {

Matrix standard_normal(Rng& rng, int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

Matrix bernoulli(Rng& rng, int rows, int cols, double prob) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.bernoulli(prob) ? 1.0 : 0.0;
    return m;
}

Matrix block_correlated(Rng& rng, int rows, int cols, double sigma, int block) {
    Matrix raw = standard_normal(rng, rows, cols);
    Matrix out(rows, cols);
    for (int start = 0; start < cols; start += block) {
        const int width = std::min(block, cols - start);
        Matrix cov = Matrix::Constant(width, width, sigma);
        cov.diagonal().setOnes();
        const Matrix L = cov.llt().matrixL();
        out.middleCols(start, width) = raw.middleCols(start, width) * L.transpose();
    }
    return out;
}

Matrix responses(const Matrix& X, const Matrix& Z, const CoefficientSet& truth, Rng& rng, double noise) {
    Matrix Y = predict(InteractionTensor(X, Z), Z, truth);
    for (Index i = 0; i < Y.rows(); ++i)
        for (Index d = 0; d < Y.cols(); ++d) Y(i, d) += noise * rng.normal();
    return Y;
}

template <class MakeX, class MakeZ>
SimData assemble(const SimConfig& c, CoefficientSet truth, MakeX make_x, MakeZ make_z) {
    Rng rng(c.seed);
    Matrix X = make_x(rng, c.N);
    Matrix Z = make_z(rng, c.N);
    Matrix Y = responses(X, Z, truth, rng, c.noise_scale);
    SimData out{DesignData(std::move(X), std::move(Z), std::move(Y)), std::nullopt, std::move(truth)};
    if (c.test_N > 0) {
        Matrix Xt = make_x(rng, c.test_N);
        Matrix Zt = make_z(rng, c.test_N);
        Matrix Yt = responses(Xt, Zt, out.truth, rng, c.noise_scale);
        out.test.emplace(std::move(Xt), std::move(Zt), std::move(Yt));
    }
    return out;
}

} // namespace

Scenario parse_scenario(const std::string& name) {
    if (name == "single") return Scenario::single;
    if (name == "multi1") return Scenario::multi1;
    if (name == "multi2") return Scenario::multi2;
    throw ValidationError("unknown scenario '" + name + "' (expected single, multi1 or multi2)");
}

std::string to_string(Scenario scenario) {
    switch (scenario) {
    case Scenario::single: return "single";
    case Scenario::multi1: return "multi1";
    case Scenario::multi2: return "multi2";
    }
    return "single";
}

void SimConfig::validate() const {
    if (N < 1) throw ValidationError("N must be positive");
    if (test_N < 0) throw ValidationError("test_N must be nonnegative");
    if (!(noise_scale >= 0.0)) throw ValidationError("noise scale must be nonnegative");
    switch (scenario) {
    case Scenario::single:
        if (p < 4) throw ValidationError("single scenario needs p >= 4");
        if (K != 3) throw ValidationError("single scenario has K = 3");
        if (D != 1) throw ValidationError("single scenario has D = 1");
        break;
    case Scenario::multi1:
        if (D != 6 || K != 4) throw ValidationError("multi1 scenario has D = 6 and K = 4");
        if (p < 27) throw ValidationError("multi1 scenario needs p >= 27");
        break;
    case Scenario::multi2:
        if (D != 24 || K != 4) throw ValidationError("multi2 scenario has D = 24 and K = 4");
        if (p < 40) throw ValidationError("multi2 scenario needs p >= 40");
        if (block < 1) throw ValidationError("block size must be positive");
        if (!(sigma < 1.0) || (block > 1 && !(sigma > -1.0 / (block - 1)))) {
            throw ValidationError("sigma must keep the block covariance positive definite");
        }
        if (!(z_prob >= 0.0 && z_prob <= 1.0)) throw ValidationError("z_prob must lie in [0, 1]");
        break;
    }
}

SimConfig default_config(Scenario scenario) {
    SimConfig c;
    c.scenario = scenario;
    switch (scenario) {
    case Scenario::single:
        break;
    case Scenario::multi1:
        c.p = 500;
        c.K = 4;
        c.D = 6;
        c.noise_scale = 1.0;
        c.test_N = 500;
        break;
    case Scenario::multi2:
        c.p = 150;
        c.K = 4;
        c.D = 24;
        c.noise_scale = 1.0;
        c.test_N = 500;
        c.z_prob = 1.0 / c.K;
        break;
    }
    return c;
}

SimData gen_single(const SimConfig& config) {
    if (config.scenario != Scenario::single) throw ValidationError("gen_single needs the single scenario");
    config.validate();
    CoefficientSet truth = CoefficientSet::zeros(config.p, 3, 1);
    const double beta[4] = {2.0, -2.0, 2.0, 2.0};
    for (int j = 0; j < 4; ++j) truth.b(j, 0, 0) = beta[j];
    truth.b(0, 3, 0) = 2.0;
    truth.b(2, 1, 0) = 2.0;
    truth.b(3, 2, 0) = -2.0;
    auto make_x = [&](Rng& rng, int n) { return standard_normal(rng, n, config.p); };
    auto make_z = [](Rng& rng, int n) { return standard_normal(rng, n, 3); };
    return assemble(config, std::move(truth), make_x, make_z);
}

SimData gen_multi1(const SimConfig& config) {
    if (config.scenario != Scenario::multi1) throw ValidationError("gen_multi1 needs the multi1 scenario");
    config.validate();
    CoefficientSet truth = CoefficientSet::zeros(config.p, 4, 6);
    const double main_sign[5] = {2.0, -2.0, 2.0, -2.0, 2.0};
    const double inter_sign[4] = {2.0, -2.0, 2.0, -2.0};
    for (int d = 0; d < 6; ++d) {
        const int base = 10 * (d / 2);
        const int cov[5] = {base, base + 1, base + 2, d % 2 == 0 ? base + 3 : base + 5, d % 2 == 0 ? base + 4 : base + 6};
        for (int i = 0; i < 5; ++i) truth.b(cov[i], 0, d) = main_sign[i];
        for (int k = 0; k < 4; ++k) truth.b(cov[k], k + 1, d) = inter_sign[k];
    }
    auto make_x = [&](Rng& rng, int n) { return standard_normal(rng, n, config.p); };
    auto make_z = [](Rng& rng, int n) { return standard_normal(rng, n, 4); };
    return assemble(config, std::move(truth), make_x, make_z);
}

SimData gen_multi2(const SimConfig& config) {
    if (config.scenario != Scenario::multi2) throw ValidationError("gen_multi2 needs the multi2 scenario");
    config.validate();
    CoefficientSet truth = CoefficientSet::zeros(config.p, 4, 24);
    for (int d = 0; d < 24; ++d) {
        const int c = d / 6;
        const int sub = (d % 6) / 3;
        const int base = 10 * c;
        for (int j = 0; j < 5; ++j) truth.b(base + j, 0, d) = 1.0;
        truth.b(base + 5 + 2 * sub, 0, d) = 1.0;
        truth.b(base + 6 + 2 * sub, 0, d) = 1.0;
        truth.b(base, c + 1, d) = 2.0;
        truth.b(base + 1, c + 1, d) = -2.0;
    }
    auto make_x = [&](Rng& rng, int n) { return block_correlated(rng, n, config.p, config.sigma, config.block); };
    auto make_z = [&](Rng& rng, int n) { return bernoulli(rng, n, 4, config.z_prob); };
    return assemble(config, std::move(truth), make_x, make_z);
}

SimData simulate(const SimConfig& config) {
    switch (config.scenario) {
    case Scenario::single: return gen_single(config);
    case Scenario::multi1: return gen_multi1(config);
    case Scenario::multi2: return gen_multi2(config);
    }
    throw ValidationError("unknown scenario");
}

} // namespace mplasso
