#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mplasso/admm_common.hpp"
#include "mplasso/core_model.hpp"
#include "mplasso/tree_groups.hpp"

namespace mplasso {

/**
 * Regularization path settings. Along the path the three penalties move
 * together as (lambda1, lambda2, lambda3) = (c1, c2, 1) * lambda; `base`
 * supplies alpha and the solver settings.
 */
struct PathSpec {
    int n_lambda = 50;
    double lambda_min_ratio = 0.01;
    std::vector<double> lambdas;  // explicit list, strictly decreasing; overrides the grid
    double c1 = 1.0;
    double c2 = 1.0;
    bool standardize = true;
    Hyperparameters base;

    void validate() const;
    /// Hyperparameters at one path point; without a tree lambda1 and lambda2 stay 0.
    Hyperparameters at(double lambda, bool with_tree = true) const;
};

/// Column centering and scaling of X (population SD; constant columns keep scale 1).
class Standardization {
public:
    Standardization() = default;
    static Standardization fit(const Matrix& X, bool enabled = true);

    bool enabled() const noexcept { return enabled_; }
    const Vector& center() const noexcept { return center_; }
    const Vector& scale() const noexcept { return scale_; }

    Matrix apply(const Matrix& X) const;
    DesignData apply(const DesignData& data) const;
    /// Coefficients of the standardized problem expressed on the raw X scale.
    CoefficientSet to_original(const CoefficientSet& standardized) const;

private:
    bool enabled_ = false;
    Vector center_;
    Vector scale_;
};

/**
 * Smallest lambda at which the all-zero coefficient array is optimal, for
 * data as given (no standardization). Found by bisection on the exact
 * proximal map of the nested penalty groups applied to the gradient at zero.
 * Throws when it is zero or unbounded.
 */
double lambda_max(const DesignData& data, const PathSpec& spec, const TreeGroups* tree);

/// Whether the all-zero coefficient array minimizes the objective under `hp`.
bool zero_is_optimal(const DesignData& data, const Hyperparameters& hp, const TreeGroups* tree);

/// Decreasing lambda list: the explicit one, or n_lambda geometric steps from lambda_max.
std::vector<double> lambda_path(const DesignData& data, const PathSpec& spec, const TreeGroups* tree);

struct PathPoint {
    double lambda = 0.0;
    CoefficientSet coef;           // raw X scale
    CoefficientSet coef_fitted;    // scale the solver worked on
    ConvergenceReport report;
    double objective = 0.0;        // of the problem the solver worked on
    int nonzero_main = 0;
    int nonzero_interactions = 0;
};

struct PathResult {
    std::vector<PathPoint> points;
    Standardization standardization;
    double lambda_max = 0.0;

    bool all_converged() const;
};

/**
 * Fits the path from the largest lambda down, warm-starting every solve from
 * the previous one. Points at or above lambda_max return the zero solution
 * without iterating. D == 1 uses the single-response solver and needs
 * `tree` null; D >= 2 needs a tree.
 */
PathResult fit_path(const DesignData& data, const PathSpec& spec, const TreeGroups* tree,
                    const std::vector<double>* lambdas = nullptr);

/// One fit at fixed hyperparameters with the same standardization and zero shortcut as fit_path.
PathResult fit_at(const DesignData& data, const Hyperparameters& hp, const TreeGroups* tree, bool standardize = true);

struct MetricReport {
    double mse = 0.0;
    Vector per_response_mse;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    int nonzero_count = 0;          // main effects beta_jd != 0
    int nonzero_interactions = 0;
};

/// Test-set MSE and, with a truth, support recovery over the main effects.
MetricReport evaluate(const CoefficientSet* truth, const CoefficientSet& fitted, const DesignData& test);

/// p x D counts of nonzero main effects across replicate fits.
Eigen::MatrixXi support_counts(const std::vector<CoefficientSet>& fits);
/// Main effects nonzero in at least `min_count` replicates.
int replicated_nonzeros(const std::vector<CoefficientSet>& fits, int min_count = 2);

struct CvSpec {
    int folds = 5;
    std::uint64_t seed = 1;
    int threads = 1;
    WeightRule weight_rule = WeightRule::sqrt_size;
};

struct CvResult {
    std::vector<double> lambdas;
    std::vector<double> mean;   // mean over folds of the validation MSE
    std::vector<double> sd;     // SD over folds
    int best_index = 0;
    int one_se_index = 0;
    std::vector<int> fold_of;
    std::vector<std::string> warnings;
    int nonconverged = 0;       // fold and full-data fits that hit max_iter
    PathResult full;            // path on all rows
    std::optional<ResponseTree> tree;  // tree of the full-data fit (D >= 2)

    double best_lambda() const { return lambdas[best_index]; }
    double one_se_lambda() const { return lambdas[one_se_index]; }
};

/// Fold label of every row: a seeded shuffle dealt round-robin.
std::vector<int> fold_assignment(int N, int folds, std::uint64_t seed);

/**
 * K-fold cross-validation over the lambda path of the full data. With
 * `tree` null and D >= 2 each fold clusters its own training responses.
 */
CvResult kfold_cv(const DesignData& data, const PathSpec& spec, const ResponseTree* tree, const CvSpec& cv);

/// Runs task(i) for i in [0, n) on up to `threads` workers; rethrows the lowest-index failure.
void parallel_for(int n, int threads, const std::function<void(int)>& task);

} // namespace mplasso
