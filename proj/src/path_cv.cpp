#include "mplasso/path_cv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "mplasso/admm_multi.hpp"
#include "mplasso/admm_single.hpp"
#include "mplasso/prox_ops.hpp"
#include "mplasso/rng.hpp"

namespace mplasso {

void PathSpec::validate() const {
    base.validate();
    if (!(c1 >= 0.0) || !(c2 >= 0.0)) throw ValidationError("lambda coupling constants must be nonnegative");
    if (lambdas.empty()) {
        if (n_lambda < 1) throw ValidationError("n_lambda must be positive");
        if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
            throw ValidationError("lambda_min_ratio must lie in (0, 1)");
        }
    } else {
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i])) {
                throw ValidationError("lambda values must be positive and finite");
            }
            if (i > 0 && !(lambdas[i] < lambdas[i - 1])) {
                throw ValidationError("lambda list must be strictly decreasing");
            }
        }
    }
}

Hyperparameters PathSpec::at(double lambda, bool with_tree) const {
    Hyperparameters hp = base;
    hp.lambda3 = lambda;
    hp.lambda1 = with_tree ? c1 * lambda : 0.0;
    hp.lambda2 = with_tree ? c2 * lambda : 0.0;
    return hp;
}

Standardization Standardization::fit(const Matrix& X, bool enabled) {
    Standardization s;
    s.enabled_ = enabled;
    s.center_ = Vector::Zero(X.cols());
    s.scale_ = Vector::Ones(X.cols());
    if (!enabled) return s;
    const double N = static_cast<double>(X.rows());
    for (Index j = 0; j < X.cols(); ++j) {
        const double mean = X.col(j).sum() / N;
        const double sd = std::sqrt((X.col(j).array() - mean).square().sum() / N);
        s.center_(j) = mean;
        if (sd > 0.0) s.scale_(j) = sd;
    }
    return s;
}

Matrix Standardization::apply(const Matrix& X) const {
    if (X.cols() != center_.size()) throw DimensionError("X has a different column count than the standardization");
    if (!enabled_) return X;
    return (X.rowwise() - center_.transpose()).array().rowwise() / scale_.transpose().array();
}

DesignData Standardization::apply(const DesignData& data) const {
    if (!enabled_) return data;
    return {apply(data.X()), data.Z(), data.Y()};
}

CoefficientSet Standardization::to_original(const CoefficientSet& c) const {
    if (c.p != center_.size()) throw DimensionError("coefficients have a different p than the standardization");
    if (!enabled_) return c;
    CoefficientSet out = c;
    for (int d = 0; d < c.D(); ++d) {
        for (int j = 0; j < c.p; ++j) {
            for (int k = 0; k <= c.K; ++k) {
                const double v = c.b(j, k, d) / scale_(j);
                out.b(j, k, d) = v;
                if (k == 0) {
                    out.beta0(d) -= center_(j) * v;
                } else {
                    out.theta0(k - 1, d) -= center_(j) * v;
                }
            }
        }
    }
    return out;
}

namespace {

void check_tree(const DesignData& data, const TreeGroups* tree) {
    if (data.D() == 1 && tree != nullptr) throw ValidationError("a response tree requires D >= 2");
    if (data.D() >= 2 && tree == nullptr) throw ValidationError("multi-response fits require a response tree");
    if (tree != nullptr && tree->num_responses != data.D()) {
        throw DimensionError("tree covers a different number of responses than Y");
    }
}

void shrink(Eigen::Ref<Matrix> block, double t) {
    const double norm = block.norm();
    if (norm <= t || norm == 0.0) {
        block.setZero();
    } else {
        block *= (norm - t) / norm;
    }
}

/**
 * Whether the proximal map of the penalty sends g to zero. The groups are
 * nested, so the map is the composition of the single-group shrinkages from
 * the smallest groups outward.
 */
bool prox_is_zero(const Matrix& g, int p, int K, const Hyperparameters& hp, const TreeGroups* tree,
                  const std::vector<const ResponseGroup*>& internal_by_size) {
    const Index w = K + 1;
    const Index D = g.cols();
    Matrix block(w, D);
    for (Index j = 0; j < p; ++j) {
        block = g.middleRows(w * j, w);
        for (Index d = 0; d < D; ++d) {
            for (Index k = 1; k < w; ++k) block(k, d) = soft_threshold(block(k, d), hp.alpha * hp.lambda3);
            shrink(block.col(d).tail(K), (1.0 - hp.alpha) * hp.lambda3);
            double t = (1.0 - hp.alpha) * hp.lambda3;
            if (tree != nullptr) t += hp.lambda2 * tree->leaves[d].weight;
            shrink(block.col(d), t);
        }
        for (const ResponseGroup* grp : internal_by_size) {
            Matrix sub(w, static_cast<Index>(grp->members.size()));
            for (std::size_t u = 0; u < grp->members.size(); ++u) sub.col(u) = block.col(grp->members[u]);
            shrink(sub, hp.lambda1 * grp->weight);
            for (std::size_t u = 0; u < grp->members.size(); ++u) block.col(grp->members[u]) = sub.col(u);
        }
        if (!block.isZero(0.0)) return false;
    }
    return true;
}

PathPoint finish_point(double lambda, CoefficientSet fitted, ConvergenceReport report, const Standardization& st,
                       const DesignData& data, const InteractionTensor& W, const Hyperparameters& hp,
                       const TreeGroups* tree) {
    PathPoint pt;
    pt.lambda = lambda;
    pt.objective = objective(data, W, fitted, hp, tree);
    pt.coef = st.to_original(fitted);
    pt.coef_fitted = std::move(fitted);
    pt.report = std::move(report);
    for (int d = 0; d < pt.coef.D(); ++d) {
        for (int j = 0; j < pt.coef.p; ++j) {
            if (pt.coef.beta(j, d) != 0.0) ++pt.nonzero_main;
            for (int k = 0; k < pt.coef.K; ++k)
                if (pt.coef.theta(j, k, d) != 0.0) ++pt.nonzero_interactions;
        }
    }
    return pt;
}

std::vector<double> geometric_grid(double top, const PathSpec& spec) {
    std::vector<double> out;
    out.reserve(spec.n_lambda);
    for (int i = 0; i < spec.n_lambda; ++i) {
        const double frac = spec.n_lambda == 1 ? 0.0 : static_cast<double>(i) / (spec.n_lambda - 1);
        out.push_back(top * std::pow(spec.lambda_min_ratio, frac));
    }
    return out;
}

} // namespace

namespace {

Matrix zero_gradient(const DesignData& data) {
    const InteractionTensor W(data);
    const InterceptProfile profile(data.Z());
    return profile.project(W.flat()).transpose() * profile.project(data.Y()) / static_cast<double>(data.N());
}

std::vector<const ResponseGroup*> internal_by_size(const TreeGroups* tree) {
    std::vector<const ResponseGroup*> internal;
    if (tree == nullptr) return internal;
    for (const auto& grp : tree->internal) internal.push_back(&grp);
    std::stable_sort(internal.begin(), internal.end(), [](const ResponseGroup* a, const ResponseGroup* b) {
        return a->members.size() < b->members.size();
    });
    return internal;
}

} // namespace

bool zero_is_optimal(const DesignData& data, const Hyperparameters& hp, const TreeGroups* tree) {
    hp.validate();
    check_tree(data, tree);
    return prox_is_zero(zero_gradient(data), data.p(), data.K(), hp, tree, internal_by_size(tree));
}

double lambda_max(const DesignData& data, const PathSpec& spec, const TreeGroups* tree) {
    spec.validate();
    check_tree(data, tree);
    const Matrix g = zero_gradient(data);
    const InterceptProfile profile(data.Z());
    const double scale = data.Y().norm();
    if (scale == 0.0 || profile.project(data.Y()).norm() <= 1e-10 * scale || g.isZero(0.0)) {
        throw ValidationError("lambda_max is zero: the responses are fully explained by the intercept block");
    }
    const auto internal = internal_by_size(tree);
    auto zero_at = [&](double lambda) {
        return prox_is_zero(g, data.p(), data.K(), spec.at(lambda, tree != nullptr), tree, internal);
    };
    double hi = g.cwiseAbs().maxCoeff();
    int doublings = 0;
    while (!zero_at(hi)) {
        hi *= 2.0;
        if (++doublings > 200 || !std::isfinite(hi)) {
            throw ValidationError("lambda_max is unbounded: some coefficients are not penalized under this alpha and coupling");
        }
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (zero_at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

std::vector<double> lambda_path(const DesignData& data, const PathSpec& spec, const TreeGroups* tree) {
    spec.validate();
    if (!spec.lambdas.empty()) return spec.lambdas;
    const Standardization st = Standardization::fit(data.X(), spec.standardize);
    return geometric_grid(lambda_max(st.apply(data), spec, tree), spec);
}

bool PathResult::all_converged() const {
    return std::all_of(points.begin(), points.end(), [](const PathPoint& p) { return p.report.converged; });
}

PathResult fit_path(const DesignData& data, const PathSpec& spec, const TreeGroups* tree,
                    const std::vector<double>* lambdas) {
    spec.validate();
    check_tree(data, tree);
    PathResult res;
    res.standardization = Standardization::fit(data.X(), spec.standardize);
    const DesignData fitted = res.standardization.apply(data);
    res.lambda_max = lambda_max(fitted, spec, tree);
    std::vector<double> grid;
    if (lambdas != nullptr) {
        PathSpec check = spec;
        check.lambdas = *lambdas;
        check.validate();
        grid = *lambdas;
    } else if (!spec.lambdas.empty()) {
        grid = spec.lambdas;
    } else {
        grid = geometric_grid(res.lambda_max, spec);
    }

    const InteractionTensor W(fitted);
    const InterceptProfile profile(fitted.Z());
    auto zero_solution = [&](const Hyperparameters& hp) {
        CoefficientSet c = CoefficientSet::zeros(fitted.p(), fitted.K(), fitted.D());
        const Matrix icpt = profile.intercepts(fitted.Y());
        c.beta0 = icpt.row(0).transpose();
        c.theta0 = icpt.bottomRows(fitted.K());
        ConvergenceReport r;
        r.converged = true;
        r.rho = hp.rho_init;
        return std::make_pair(std::move(c), std::move(r));
    };

    if (tree == nullptr) {
        const SingleResponseProblem problem(fitted);
        std::optional<AdmmStateSingle> warm;
        for (double lambda : grid) {
            const Hyperparameters hp = spec.at(lambda, false);
            if (lambda >= res.lambda_max) {
                auto [c, r] = zero_solution(hp);
                res.points.push_back(finish_point(lambda, std::move(c), std::move(r), res.standardization, fitted, W, hp, tree));
                warm.reset();
                continue;
            }
            SingleFit fit = problem.solve(hp, warm ? &*warm : nullptr);
            warm = std::move(fit.state);
            res.points.push_back(
                finish_point(lambda, std::move(fit.coef), std::move(fit.report), res.standardization, fitted, W, hp, tree));
        }
    } else {
        const MultiResponseProblem problem(fitted, *tree, spec.base.linear_solver);
        std::optional<AdmmStateMulti> warm;
        for (double lambda : grid) {
            const Hyperparameters hp = spec.at(lambda, true);
            if (lambda >= res.lambda_max) {
                auto [c, r] = zero_solution(hp);
                res.points.push_back(finish_point(lambda, std::move(c), std::move(r), res.standardization, fitted, W, hp, tree));
                warm.reset();
                continue;
            }
            MultiFit fit = problem.solve(hp, warm ? &*warm : nullptr);
            warm = std::move(fit.state);
            res.points.push_back(
                finish_point(lambda, std::move(fit.coef), std::move(fit.report), res.standardization, fitted, W, hp, tree));
        }
    }
    return res;
}

PathResult fit_at(const DesignData& data, const Hyperparameters& hp, const TreeGroups* tree, bool standardize) {
    hp.validate();
    check_tree(data, tree);
    PathResult res;
    res.standardization = Standardization::fit(data.X(), standardize);
    const DesignData fitted = res.standardization.apply(data);
    const InteractionTensor W(fitted);
    CoefficientSet coef;
    ConvergenceReport report;
    if (zero_is_optimal(fitted, hp, tree)) {
        coef = CoefficientSet::zeros(fitted.p(), fitted.K(), fitted.D());
        const Matrix icpt = InterceptProfile(fitted.Z()).intercepts(fitted.Y());
        coef.beta0 = icpt.row(0).transpose();
        coef.theta0 = icpt.bottomRows(fitted.K());
        report.converged = true;
        report.rho = hp.rho_init;
    } else if (tree == nullptr) {
        SingleFit fit = fit_single(fitted, hp);
        coef = std::move(fit.coef);
        report = std::move(fit.report);
    } else {
        MultiFit fit = fit_multi(fitted, hp, *tree);
        coef = std::move(fit.coef);
        report = std::move(fit.report);
    }
    res.points.push_back(finish_point(hp.lambda3, std::move(coef), std::move(report), res.standardization, fitted, W, hp, tree));
    return res;
}

MetricReport evaluate(const CoefficientSet* truth, const CoefficientSet& fitted, const DesignData& test) {
    fitted.check_matches(test);
    MetricReport m;
    const Matrix resid = test.Y() - predict(test, fitted);
    m.per_response_mse = resid.colwise().squaredNorm().transpose() / static_cast<double>(test.N());
    m.mse = resid.squaredNorm() / static_cast<double>(resid.size());
    for (int d = 0; d < fitted.D(); ++d) {
        for (int j = 0; j < fitted.p; ++j) {
            if (fitted.beta(j, d) != 0.0) ++m.nonzero_count;
            for (int k = 0; k < fitted.K; ++k)
                if (fitted.theta(j, k, d) != 0.0) ++m.nonzero_interactions;
        }
    }
    if (truth == nullptr) return m;
    if (truth->p != fitted.p || truth->K != fitted.K || truth->D() != fitted.D()) {
        throw DimensionError("truth and fitted coefficients differ in shape");
    }
    long tp = 0, fn = 0, tn = 0, fp = 0;
    for (int d = 0; d < fitted.D(); ++d) {
        for (int j = 0; j < fitted.p; ++j) {
            const bool t = truth->beta(j, d) != 0.0;
            const bool f = fitted.beta(j, d) != 0.0;
            if (t) {
                f ? ++tp : ++fn;
            } else {
                f ? ++fp : ++tn;
            }
        }
    }
    if (tp + fn > 0) m.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (tn + fp > 0) m.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
    return m;
}

Eigen::MatrixXi support_counts(const std::vector<CoefficientSet>& fits) {
    if (fits.empty()) throw ValidationError("no fits to aggregate");
    const int p = fits.front().p;
    const int D = fits.front().D();
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(p, D);
    for (const auto& f : fits) {
        if (f.p != p || f.D() != D) throw DimensionError("replicate fits differ in shape");
        for (int d = 0; d < D; ++d)
            for (int j = 0; j < p; ++j)
                if (f.beta(j, d) != 0.0) ++counts(j, d);
    }
    return counts;
}

int replicated_nonzeros(const std::vector<CoefficientSet>& fits, int min_count) {
    return (support_counts(fits).array() >= min_count).count();
}

std::vector<int> fold_assignment(int N, int folds, std::uint64_t seed) {
    if (folds < 2) throw ValidationError("cross-validation needs at least two folds");
    if (N < folds) throw ValidationError("cross-validation needs at least as many rows as folds");
    std::vector<int> order(N);
    for (int i = 0; i < N; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<int> fold_of(N);
    for (int i = 0; i < N; ++i) fold_of[order[i]] = i % folds;
    return fold_of;
}

void parallel_for(int n, int threads, const std::function<void(int)>& task) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) task(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min(threads, n);
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

CvResult kfold_cv(const DesignData& data, const PathSpec& spec, const ResponseTree* tree, const CvSpec& cv) {
    spec.validate();
    CvResult out;
    out.fold_of = fold_assignment(data.N(), cv.folds, cv.seed);
    const bool multi = data.D() >= 2;
    if (tree != nullptr && !multi) throw ValidationError("a response tree requires D >= 2");

    std::optional<TreeGroups> full_groups;
    if (multi) {
        out.tree = tree != nullptr ? *tree : cluster_responses(data.Y());
        full_groups = derive_groups(*out.tree, cv.weight_rule);
    }
    out.lambdas = lambda_path(data, spec, full_groups ? &*full_groups : nullptr);
    const int L = static_cast<int>(out.lambdas.size());

    std::vector<std::vector<double>> fold_mse(cv.folds, std::vector<double>(L, 0.0));
    std::vector<std::vector<std::string>> fold_warnings(cv.folds);
    std::vector<int> fold_nonconverged(cv.folds + 1, 0);

    parallel_for(cv.folds + 1, cv.threads, [&](int f) {
        if (f == cv.folds) {
            out.full = fit_path(data, spec, full_groups ? &*full_groups : nullptr, &out.lambdas);
            for (const auto& pt : out.full.points) fold_nonconverged[f] += pt.report.converged ? 0 : 1;
            return;
        }
        std::vector<int> train_rows, valid_rows;
        for (int i = 0; i < data.N(); ++i) (out.fold_of[i] == f ? valid_rows : train_rows).push_back(i);
        const DesignData train = data.subset(train_rows);
        const DesignData valid = data.subset(valid_rows);
        for (int d = 0; d < train.D(); ++d) {
            const auto col = train.Y().col(d);
            if (col.maxCoeff() == col.minCoeff()) {
                fold_warnings[f].push_back("fold " + std::to_string(f + 1) + ": response " + std::to_string(d + 1) +
                                           " is constant in the training rows");
            }
        }
        std::optional<TreeGroups> groups;
        if (multi) {
            groups = tree != nullptr ? *full_groups : derive_groups(cluster_responses(train.Y()), cv.weight_rule);
        }
        const PathResult path = fit_path(train, spec, groups ? &*groups : nullptr, &out.lambdas);
        for (int l = 0; l < L; ++l) {
            const Matrix resid = valid.Y() - predict(valid, path.points[l].coef);
            fold_mse[f][l] = resid.squaredNorm() / static_cast<double>(resid.size());
            fold_nonconverged[f] += path.points[l].report.converged ? 0 : 1;
        }
    });

    for (const auto& w : fold_warnings) out.warnings.insert(out.warnings.end(), w.begin(), w.end());
    for (int c : fold_nonconverged) out.nonconverged += c;
    out.mean.assign(L, 0.0);
    out.sd.assign(L, 0.0);
    for (int l = 0; l < L; ++l) {
        double sum = 0.0;
        for (int f = 0; f < cv.folds; ++f) sum += fold_mse[f][l];
        const double mean = sum / cv.folds;
        double sq = 0.0;
        for (int f = 0; f < cv.folds; ++f) sq += (fold_mse[f][l] - mean) * (fold_mse[f][l] - mean);
        out.mean[l] = mean;
        out.sd[l] = std::sqrt(sq / (cv.folds - 1));
    }
    out.best_index = static_cast<int>(std::min_element(out.mean.begin(), out.mean.end()) - out.mean.begin());
    const double bound = out.mean[out.best_index] + out.sd[out.best_index] / std::sqrt(static_cast<double>(cv.folds));
    out.one_se_index = out.best_index;
    for (int l = 0; l <= out.best_index; ++l) {
        if (out.mean[l] <= bound) {
            out.one_se_index = l;
            break;
        }
    }
    return out;
}

} // namespace mplasso
