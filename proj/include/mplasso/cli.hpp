#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mplasso/core_model.hpp"
#include "mplasso/path_cv.hpp"
#include "mplasso/simgen.hpp"
#include "mplasso/tree_groups.hpp"

namespace mplasso {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_validation = 2, exit_not_converged = 3 };

enum class Command { fit, cv, path, simulate, predict };

/// Data plus the header names it was read with.
struct NamedData {
    DesignData data;
    std::vector<std::string> covariates;
    std::vector<std::string> modifiers;
    std::vector<std::string> responses;
};

/// Reads X, Z and Y CSV files (headers mandatory, rows aligned by position).
NamedData ingest(const std::string& x_path, const std::string& z_path, const std::string& y_path);

struct RunConfig {
    Command command = Command::fit;
    std::string x_path, z_path, y_path;
    std::string test_x_path, test_z_path, test_y_path;
    std::string tree_path;   // empty: cluster the responses
    std::string truth_path;  // coefficients.json of the true model, for support metrics
    std::string coef_path;   // predict input
    std::string out_dir = ".";
    WeightRule weight_rule = WeightRule::sqrt_size;
    PathSpec path;
    std::optional<double> lambda;
    std::optional<double> lambda1, lambda2, lambda3;
    int folds = 5;
    std::uint64_t seed = 1;
    int threads = 1;
    bool use_one_se = false;
    bool dense_interactions = false;
    SimConfig sim;
};

/// Coefficient document: estimates on the raw X scale plus names, lambdas and tree.
nlohmann::json coefficients_to_json(const CoefficientSet& coef, const std::vector<std::string>& covariates,
                                    const std::vector<std::string>& modifiers,
                                    const std::vector<std::string>& responses);
CoefficientSet coefficients_from_json(const nlohmann::json& doc);

/// Executes one command and writes its artifacts under out_dir.
int run(const RunConfig& config);

/// Parses argv (flags > config file > defaults) and runs; never throws.
int run_cli(int argc, char** argv);

} // namespace mplasso
