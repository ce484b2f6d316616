#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mplasso/core_model.hpp"

namespace mplasso {

enum class Scenario { single, multi1, multi2 };

Scenario parse_scenario(const std::string& name);
std::string to_string(Scenario scenario);

/**
 * Generator settings. default_config() fills the scenario's standard shape:
 * single N=100, p=10, K=3 with noise 0.5; multi1 N=100, p=500, K=4, D=6 and
 * multi2 N=100, p=150, K=4, D=24 with unit noise and 500 test rows.
 */
struct SimConfig {
    Scenario scenario = Scenario::single;
    int N = 100;
    int p = 10;
    int K = 3;
    int D = 1;
    double noise_scale = 0.5;
    std::uint64_t seed = 1;
    double sigma = 0.4;    // multi2 within-block covariance
    int block = 10;        // multi2 block size; a trailing partial block is allowed
    double z_prob = 0.25;  // multi2 tissue indicator probability
    int test_N = 0;

    void validate() const;
};

SimConfig default_config(Scenario scenario);

struct SimData {
    DesignData train;
    std::optional<DesignData> test;
    CoefficientSet truth;
};

/**
 * y = X1(2 + 2 Z3) - 2 X2 + X3(2 + 2 Z1) + X4(2 - 2 Z2) + noise * eps with
 * X, Z, eps standard normal.
 */
SimData gen_single(const SimConfig& config);

/**
 * Six responses in three pairs. Each response has five main effects of
 * size 2 and four interactions X_j Z_k; the two responses of a pair share
 * three of the five covariates and three of the four interactions, so the
 * pairs merge first in the response hierarchy. Covariates (1-based):
 * pair c uses 10c+1..10c+5 and 10c+1..10c+3, 10c+6, 10c+7.
 */
SimData gen_multi1(const SimConfig& config);

/**
 * 24 responses in four clusters of six, each split into two sub-clusters of
 * three. Cluster c shares main effects on covariates 10c+1..10c+5 and each
 * sub-cluster adds two of 10c+6..10c+9; covariates 10c+1 and 10c+2 interact
 * with tissue indicator Z_{c+1}. X is Gaussian with unit variances and
 * covariance sigma inside consecutive blocks of `block` columns; Z is
 * Bernoulli(z_prob).
 */
SimData gen_multi2(const SimConfig& config);

SimData simulate(const SimConfig& config);

} // namespace mplasso
