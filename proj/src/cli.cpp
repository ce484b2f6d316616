#include "mplasso/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mplasso/csv.hpp"

namespace mplasso {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* coef_format = "mplasso-coefficients";
constexpr int coef_version = 1;

std::string out_path(const RunConfig& cfg, const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); }

void write_json(const std::string& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::vector<std::string> numbered(const std::string& prefix, int n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

void require(const std::string& value, const std::string& flag, const char* command) {
    if (value.empty()) throw ValidationError(std::string(command) + " requires " + flag);
}

json report_json(const ConvergenceReport& r) {
    return {{"converged", r.converged}, {"iterations", r.iterations}, {"r_norm", r.r_norm},
            {"s_norm", r.s_norm},       {"eps_pri", r.eps_pri},       {"eps_dual", r.eps_dual},
            {"rho", r.rho},             {"rho_changes", r.rho_changes}};
}

json metric_json(const MetricReport& m) {
    json doc = {{"mse", m.mse},
                {"per_response_mse", std::vector<double>(m.per_response_mse.begin(), m.per_response_mse.end())},
                {"nonzero_main", m.nonzero_count},
                {"nonzero_interactions", m.nonzero_interactions}};
    if (m.sensitivity) doc["sensitivity"] = *m.sensitivity;
    if (m.specificity) doc["specificity"] = *m.specificity;
    return doc;
}

json hyper_json(const Hyperparameters& hp) {
    return {{"lambda1", hp.lambda1},   {"lambda2", hp.lambda2},       {"lambda3", hp.lambda3},
            {"alpha", hp.alpha},       {"rho_init", hp.rho_init},     {"eps_abs", hp.eps_abs},
            {"eps_rel", hp.eps_rel},   {"max_iter", hp.max_iter},     {"rho_adapt", to_string(hp.rho_adapt)},
            {"linear_solver", to_string(hp.linear_solver)}};
}

json standardization_json(const Standardization& st) {
    return {{"enabled", st.enabled()},
            {"center", std::vector<double>(st.center().begin(), st.center().end())},
            {"scale", std::vector<double>(st.scale().begin(), st.scale().end())}};
}

std::optional<ResponseTree> resolve_tree(const RunConfig& cfg, const DesignData& data) {
    if (data.D() == 1) {
        if (!cfg.tree_path.empty()) throw ValidationError("--tree needs at least two responses");
        return std::nullopt;
    }
    if (cfg.tree_path.empty()) return cluster_responses(data.Y());
    ResponseTree tree = ResponseTree::from_json(read_json(cfg.tree_path));
    if (tree.num_responses() != data.D()) {
        throw DimensionError(cfg.tree_path + " covers " + std::to_string(tree.num_responses()) +
                             " responses but Y has " + std::to_string(data.D()));
    }
    return tree;
}

std::optional<DesignData> load_test(const RunConfig& cfg, const NamedData& train) {
    const int given = !cfg.test_x_path.empty() + !cfg.test_z_path.empty() + !cfg.test_y_path.empty();
    if (given == 0) return std::nullopt;
    if (given != 3) throw ValidationError("--test-x, --test-z and --test-y go together");
    NamedData test = ingest(cfg.test_x_path, cfg.test_z_path, cfg.test_y_path);
    if (test.data.p() != train.data.p() || test.data.K() != train.data.K() || test.data.D() != train.data.D()) {
        throw DimensionError("test data columns differ from the training data");
    }
    return std::move(test.data);
}

std::optional<CoefficientSet> load_truth(const RunConfig& cfg, const DesignData& data) {
    if (cfg.truth_path.empty()) return std::nullopt;
    CoefficientSet truth = coefficients_from_json(read_json(cfg.truth_path));
    truth.check_matches(data);
    return truth;
}

void write_interactions(const std::string& path, const CoefficientSet& c, const NamedData& names, bool dense) {
    std::vector<std::vector<std::string>> rows;
    for (int d = 0; d < c.D(); ++d) {
        for (int j = 0; j < c.p; ++j) {
            for (int k = 0; k < c.K; ++k) {
                const double t = c.theta(j, k, d);
                if (t == 0.0 && !dense) continue;
                rows.push_back({std::to_string(j), std::to_string(k), std::to_string(d), names.covariates[j],
                                names.modifiers[k], names.responses[d], format_double(t)});
            }
        }
    }
    write_rows(path, {"j", "k", "d", "covariate", "modifier", "response", "theta"}, rows);
}

void write_path_csv(const std::string& path, const PathResult& res) {
    std::vector<std::vector<std::string>> rows;
    for (const PathPoint& pt : res.points) {
        const ConvergenceReport& r = pt.report;
        rows.push_back({format_double(pt.lambda), format_double(pt.objective), std::to_string(pt.nonzero_main),
                        std::to_string(pt.nonzero_interactions), std::to_string(r.iterations),
                        r.converged ? "1" : "0", format_double(r.r_norm), format_double(r.s_norm),
                        format_double(r.eps_pri), format_double(r.eps_dual), format_double(r.rho)});
    }
    write_rows(path,
               {"lambda", "objective", "nonzero_main", "nonzero_interactions", "iterations", "converged", "r_norm",
                "s_norm", "eps_pri", "eps_dual", "rho"},
               rows);
}

json fit_document(const PathPoint& pt, const Hyperparameters& hp, const NamedData& names,
                  const std::optional<ResponseTree>& tree, const RunConfig& cfg, const Standardization& st) {
    json doc = coefficients_to_json(pt.coef, names.covariates, names.modifiers, names.responses);
    doc["lambda"] = pt.lambda;
    doc["hyperparameters"] = hyper_json(hp);
    doc["weight_rule"] = to_string(cfg.weight_rule);
    doc["tree"] = tree ? tree->to_json() : json(nullptr);
    doc["standardization"] = standardization_json(st);
    doc["converged"] = pt.report.converged;
    doc["iterations"] = pt.report.iterations;
    doc["objective"] = pt.objective;
    return doc;
}

Hyperparameters fit_hyperparameters(const RunConfig& cfg, bool with_tree) {
    if (!cfg.lambda && !cfg.lambda3) throw ValidationError("fit requires --lambda or --lambda3");
    Hyperparameters hp = cfg.path.at(cfg.lambda ? *cfg.lambda : *cfg.lambda3, with_tree);
    if (cfg.lambda3) hp.lambda3 = *cfg.lambda3;
    if (cfg.lambda1) hp.lambda1 = *cfg.lambda1;
    if (cfg.lambda2) hp.lambda2 = *cfg.lambda2;
    if (!with_tree && (hp.lambda1 != 0.0 || hp.lambda2 != 0.0)) {
        throw ValidationError("lambda1 and lambda2 need a multi-response fit");
    }
    return hp;
}

int cmd_fit(const RunConfig& cfg) {
    require(cfg.x_path, "--x", "fit");
    const NamedData in = ingest(cfg.x_path, cfg.z_path, cfg.y_path);
    const std::optional<ResponseTree> tree = resolve_tree(cfg, in.data);
    const std::optional<TreeGroups> groups =
        tree ? std::optional<TreeGroups>(derive_groups(*tree, cfg.weight_rule)) : std::nullopt;
    const Hyperparameters hp = fit_hyperparameters(cfg, tree.has_value());
    const std::optional<DesignData> test = load_test(cfg, in);
    const std::optional<CoefficientSet> truth = load_truth(cfg, in.data);

    const PathResult res = fit_at(in.data, hp, groups ? &*groups : nullptr, cfg.path.standardize);
    const PathPoint& pt = res.points.front();

    write_json(out_path(cfg, "coefficients.json"), fit_document(pt, hp, in, tree, cfg, res.standardization));
    write_interactions(out_path(cfg, "interactions.csv"), pt.coef, in, cfg.dense_interactions);
    json metrics = {{"command", "fit"}, {"lambda", pt.lambda}, {"objective", pt.objective},
                    {"convergence", report_json(pt.report)},
                    {"train", metric_json(evaluate(truth ? &*truth : nullptr, pt.coef, in.data))}};
    if (test) metrics["test"] = metric_json(evaluate(truth ? &*truth : nullptr, pt.coef, *test));
    write_json(out_path(cfg, "metrics.json"), metrics);
    return pt.report.converged ? exit_ok : exit_not_converged;
}

int cmd_path(const RunConfig& cfg) {
    require(cfg.x_path, "--x", "path");
    const NamedData in = ingest(cfg.x_path, cfg.z_path, cfg.y_path);
    const std::optional<ResponseTree> tree = resolve_tree(cfg, in.data);
    const std::optional<TreeGroups> groups =
        tree ? std::optional<TreeGroups>(derive_groups(*tree, cfg.weight_rule)) : std::nullopt;
    const PathResult res = fit_path(in.data, cfg.path, groups ? &*groups : nullptr);

    write_path_csv(out_path(cfg, "path.csv"), res);
    const auto nonconverged = std::count_if(res.points.begin(), res.points.end(),
                                            [](const PathPoint& p) { return !p.report.converged; });
    json metrics = {{"command", "path"},
                    {"lambda_max", res.lambda_max},
                    {"n_lambda", res.points.size()},
                    {"nonconverged", nonconverged},
                    {"tree", tree ? tree->to_json() : json(nullptr)}};
    write_json(out_path(cfg, "metrics.json"), metrics);
    return res.all_converged() ? exit_ok : exit_not_converged;
}

int cmd_cv(const RunConfig& cfg) {
    require(cfg.x_path, "--x", "cv");
    const NamedData in = ingest(cfg.x_path, cfg.z_path, cfg.y_path);
    std::optional<ResponseTree> given;
    if (!cfg.tree_path.empty()) given = resolve_tree(cfg, in.data);
    const std::optional<DesignData> test = load_test(cfg, in);
    const std::optional<CoefficientSet> truth = load_truth(cfg, in.data);

    CvSpec cv;
    cv.folds = cfg.folds;
    cv.seed = cfg.seed;
    cv.threads = cfg.threads;
    cv.weight_rule = cfg.weight_rule;
    const CvResult res = kfold_cv(in.data, cfg.path, given ? &*given : nullptr, cv);

    const int sel = cfg.use_one_se ? res.one_se_index : res.best_index;
    const PathPoint& pt = res.full.points[sel];
    const Hyperparameters hp = cfg.path.at(pt.lambda, in.data.D() >= 2);

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < res.lambdas.size(); ++i) {
        rows.push_back({format_double(res.lambdas[i]), format_double(res.mean[i]), format_double(res.sd[i]),
                        std::to_string(res.full.points[i].nonzero_main),
                        std::to_string(res.full.points[i].nonzero_interactions)});
    }
    write_rows(out_path(cfg, "cv.csv"), {"lambda", "mean", "sd", "nonzero_main", "nonzero_interactions"}, rows);
    write_path_csv(out_path(cfg, "path.csv"), res.full);
    write_json(out_path(cfg, "coefficients.json"),
               fit_document(pt, hp, in, res.tree, cfg, res.full.standardization));
    write_interactions(out_path(cfg, "interactions.csv"), pt.coef, in, cfg.dense_interactions);

    json metrics = {{"command", "cv"},
                    {"folds", cfg.folds},
                    {"seed", cfg.seed},
                    {"lambda_max", res.full.lambda_max},
                    {"best_lambda", res.best_lambda()},
                    {"one_se_lambda", res.one_se_lambda()},
                    {"selection", cfg.use_one_se ? "1se" : "min"},
                    {"selected_lambda", pt.lambda},
                    {"cv_mse", res.mean[sel]},
                    {"cv_sd", res.sd[sel]},
                    {"nonconverged", res.nonconverged},
                    {"warnings", res.warnings},
                    {"convergence", report_json(pt.report)},
                    {"train", metric_json(evaluate(truth ? &*truth : nullptr, pt.coef, in.data))}};
    if (test) metrics["test"] = metric_json(evaluate(truth ? &*truth : nullptr, pt.coef, *test));
    write_json(out_path(cfg, "metrics.json"), metrics);
    return res.nonconverged == 0 ? exit_ok : exit_not_converged;
}

void write_design(const RunConfig& cfg, const std::string& prefix, const DesignData& data) {
    write_csv(out_path(cfg, prefix + "X.csv"), numbered("X", data.p()), data.X());
    write_csv(out_path(cfg, prefix + "Z.csv"), numbered("Z", data.K()), data.Z());
    write_csv(out_path(cfg, prefix + "Y.csv"), numbered("Y", data.D()), data.Y());
}

int cmd_simulate(const RunConfig& cfg) {
    const SimData sim = simulate(cfg.sim);
    write_design(cfg, "", sim.train);
    if (sim.test) write_design(cfg, "test_", *sim.test);
    const CoefficientSet& t = sim.truth;
    write_json(out_path(cfg, "truth.json"),
               coefficients_to_json(t, numbered("X", t.p), numbered("Z", t.K), numbered("Y", t.D())));
    const SimConfig& s = cfg.sim;
    json meta = {{"command", "simulate"}, {"scenario", to_string(s.scenario)}, {"N", s.N}, {"p", s.p},
                 {"K", s.K}, {"D", s.D}, {"noise_scale", s.noise_scale}, {"seed", s.seed}, {"test_N", s.test_N}};
    if (s.scenario == Scenario::multi2) {
        meta["sigma"] = s.sigma;
        meta["block"] = s.block;
        meta["z_prob"] = s.z_prob;
    }
    write_json(out_path(cfg, "simulation.json"), meta);
    return exit_ok;
}

int cmd_predict(const RunConfig& cfg) {
    require(cfg.coef_path, "--coef", "predict");
    require(cfg.x_path, "--x", "predict");
    require(cfg.z_path, "--z", "predict");
    const json doc = read_json(cfg.coef_path);
    const CoefficientSet coef = coefficients_from_json(doc);
    const CsvTable X = read_csv(cfg.x_path);
    const CsvTable Z = read_csv(cfg.z_path);
    if (X.values.rows() != Z.values.rows()) {
        throw DimensionError(cfg.x_path + " has " + std::to_string(X.values.rows()) + " rows but " + cfg.z_path +
                             " has " + std::to_string(Z.values.rows()));
    }
    if (X.values.cols() != coef.p || Z.values.cols() != coef.K) {
        throw DimensionError("X/Z columns do not match the coefficient file");
    }
    const auto names = doc.at("names");
    if (names.at("covariates").get<std::vector<std::string>>() != X.header ||
        names.at("modifiers").get<std::vector<std::string>>() != Z.header) {
        throw ValidationError("X/Z headers differ from the names in " + cfg.coef_path);
    }
    const auto responses = names.at("responses").get<std::vector<std::string>>();

    Matrix Y = Matrix::Zero(X.values.rows(), coef.D());
    const bool have_y = !cfg.y_path.empty();
    if (have_y) {
        const CsvTable Yt = read_csv(cfg.y_path);
        if (Yt.values.rows() != X.values.rows() || Yt.values.cols() != coef.D()) {
            throw DimensionError(cfg.y_path + " does not match the predictors or the coefficient file");
        }
        Y = Yt.values;
    }
    const DesignData data(X.values, Z.values, Y);
    write_csv(out_path(cfg, "predictions.csv"), responses, predict(data, coef));
    if (have_y) {
        json metrics = {{"command", "predict"}, {"test", metric_json(evaluate(nullptr, coef, data))}};
        write_json(out_path(cfg, "metrics.json"), metrics);
    }
    return exit_ok;
}

} // namespace

NamedData ingest(const std::string& x_path, const std::string& z_path, const std::string& y_path) {
    if (x_path.empty() || z_path.empty() || y_path.empty()) throw ValidationError("--x, --z and --y are required");
    CsvTable X = read_csv(x_path);
    CsvTable Z = read_csv(z_path);
    CsvTable Y = read_csv(y_path);
    auto same_rows = [](const CsvTable& a, const std::string& pa, const CsvTable& b, const std::string& pb) {
        if (a.values.rows() != b.values.rows()) {
            throw DimensionError(pa + " has " + std::to_string(a.values.rows()) + " data rows but " + pb + " has " +
                                 std::to_string(b.values.rows()));
        }
    };
    same_rows(X, x_path, Z, z_path);
    same_rows(X, x_path, Y, y_path);
    NamedData out{DesignData(std::move(X.values), std::move(Z.values), std::move(Y.values)), std::move(X.header),
                  std::move(Z.header), std::move(Y.header)};
    return out;
}

json coefficients_to_json(const CoefficientSet& c, const std::vector<std::string>& covariates,
                          const std::vector<std::string>& modifiers, const std::vector<std::string>& responses) {
    if (static_cast<int>(covariates.size()) != c.p || static_cast<int>(modifiers.size()) != c.K ||
        static_cast<int>(responses.size()) != c.D()) {
        throw DimensionError("name lists do not match the coefficient shape");
    }
    json beta = json::array();
    json theta = json::array();
    for (int j = 0; j < c.p; ++j) {
        json bj = json::array();
        for (int d = 0; d < c.D(); ++d) bj.push_back(c.beta(j, d));
        beta.push_back(std::move(bj));
        json tj = json::array();
        for (int k = 0; k < c.K; ++k) {
            json tk = json::array();
            for (int d = 0; d < c.D(); ++d) tk.push_back(c.theta(j, k, d));
            tj.push_back(std::move(tk));
        }
        theta.push_back(std::move(tj));
    }
    json theta0 = json::array();
    for (int k = 0; k < c.K; ++k) {
        json row = json::array();
        for (int d = 0; d < c.D(); ++d) row.push_back(c.theta0(k, d));
        theta0.push_back(std::move(row));
    }
    return {{"format", coef_format},
            {"version", coef_version},
            {"p", c.p},
            {"K", c.K},
            {"D", c.D()},
            {"names", {{"covariates", covariates}, {"modifiers", modifiers}, {"responses", responses}}},
            {"beta0", std::vector<double>(c.beta0.begin(), c.beta0.end())},
            {"theta0", std::move(theta0)},
            {"beta", std::move(beta)},
            {"theta", std::move(theta)}};
}

CoefficientSet coefficients_from_json(const json& doc) {
    try {
        if (doc.at("format").get<std::string>() != coef_format || doc.at("version").get<int>() != coef_version) {
            throw ValidationError("not a version 1 coefficient document");
        }
        const int p = doc.at("p").get<int>();
        const int K = doc.at("K").get<int>();
        const int D = doc.at("D").get<int>();
        if (p < 1 || K < 1 || D < 1) throw ValidationError("coefficient document has an empty dimension");
        CoefficientSet c = CoefficientSet::zeros(p, K, D);
        auto expect = [](const json& a, std::size_t n, const char* what) -> const json& {
            if (!a.is_array() || a.size() != n) throw DimensionError(std::string("coefficient field ") + what + " has the wrong shape");
            return a;
        };
        const json& b0 = expect(doc.at("beta0"), D, "beta0");
        for (int d = 0; d < D; ++d) c.beta0(d) = b0[d].get<double>();
        const json& t0 = expect(doc.at("theta0"), K, "theta0");
        for (int k = 0; k < K; ++k)
            for (int d = 0; d < D; ++d) c.theta0(k, d) = expect(t0[k], D, "theta0")[d].get<double>();
        const json& beta = expect(doc.at("beta"), p, "beta");
        const json& theta = expect(doc.at("theta"), p, "theta");
        for (int j = 0; j < p; ++j) {
            for (int d = 0; d < D; ++d) c.b(j, 0, d) = expect(beta[j], D, "beta")[d].get<double>();
            const json& tj = expect(theta[j], K, "theta");
            for (int k = 0; k < K; ++k)
                for (int d = 0; d < D; ++d) c.b(j, k + 1, d) = expect(tj[k], D, "theta")[d].get<double>();
        }
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("coefficient document: ") + e.what());
    }
}

int run(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec || !fs::is_directory(cfg.out_dir)) throw ValidationError("cannot create output directory " + cfg.out_dir);
    switch (cfg.command) {
    case Command::fit: return cmd_fit(cfg);
    case Command::path: return cmd_path(cfg);
    case Command::cv: return cmd_cv(cfg);
    case Command::simulate: return cmd_simulate(cfg);
    case Command::predict: return cmd_predict(cfg);
    }
    return exit_failure;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Pliable lasso and tree-guided multi-response pliable lasso"};
    app.set_config("--config", "", "Flat key = value file; flags given on the command line win");
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();

    RunConfig cfg;
    Hyperparameters& hp = cfg.path.base;
    std::string weight_rule = to_string(cfg.weight_rule);
    std::string rho_adapt = to_string(hp.rho_adapt);
    std::string linear_solver = to_string(hp.linear_solver);
    std::string select = "min";
    std::string scenario = "single";
    bool no_standardize = false;
    std::optional<int> sim_n, sim_p, sim_test_n, sim_block;
    std::optional<double> sim_noise, sim_sigma, sim_z_prob;

    app.add_option("--x", cfg.x_path, "Covariates CSV (N x p, header row)");
    app.add_option("--z", cfg.z_path, "Modifiers CSV (N x K, header row)");
    app.add_option("--y", cfg.y_path, "Responses CSV (N x D, header row)");
    app.add_option("--test-x", cfg.test_x_path, "Held-out covariates CSV");
    app.add_option("--test-z", cfg.test_z_path, "Held-out modifiers CSV");
    app.add_option("--test-y", cfg.test_y_path, "Held-out responses CSV");
    app.add_option("--tree", cfg.tree_path, "Response tree JSON; clustered from Y when absent");
    app.add_option("--truth", cfg.truth_path, "True coefficients JSON for support metrics");
    app.add_option("--coef", cfg.coef_path, "coefficients.json to predict with");
    app.add_option("-o,--out", cfg.out_dir, "Output directory");
    app.add_option("--weight-rule", weight_rule, "Tree group weights: sqrt_size, unit or explicit");
    app.add_option("--alpha", hp.alpha, "Mix between the l1 and group parts of the pliable penalty");
    app.add_option("--lambda", cfg.lambda, "fit: path lambda, expanded to (c1, c2, 1) * lambda");
    app.add_option("--lambda1", cfg.lambda1, "fit: internal-node tree penalty");
    app.add_option("--lambda2", cfg.lambda2, "fit: leaf tree penalty");
    app.add_option("--lambda3", cfg.lambda3, "fit: pliable penalty");
    app.add_option("--c1", cfg.path.c1, "Internal-node penalty as a multiple of lambda");
    app.add_option("--c2", cfg.path.c2, "Leaf penalty as a multiple of lambda");
    app.add_option("--n-lambda", cfg.path.n_lambda, "Path length");
    app.add_option("--lambda-min-ratio", cfg.path.lambda_min_ratio, "Smallest lambda over lambda_max");
    app.add_option("--lambdas", cfg.path.lambdas, "Explicit decreasing lambda list")->delimiter(',');
    app.add_flag("--no-standardize", no_standardize, "Fit on raw X columns");
    app.add_option("--rho", hp.rho_init, "Initial ADMM penalty parameter");
    app.add_option("--eps-abs", hp.eps_abs, "Absolute stopping tolerance");
    app.add_option("--eps-rel", hp.eps_rel, "Relative stopping tolerance");
    app.add_option("--max-iter", hp.max_iter, "ADMM iteration cap per fit");
    app.add_option("--rho-adapt", rho_adapt, "fixed, paper_rule or residual_balance");
    app.add_option("--linear-solver", linear_solver, "auto, cholesky, woodbury or cg");
    app.add_option("--folds", cfg.folds, "Cross-validation folds");
    app.add_option("--seed", cfg.seed, "Fold and simulation seed");
    app.add_option("--threads", cfg.threads, "Worker threads for cross-validation");
    app.add_option("--select", select, "cv selection rule: min or 1se")->check(CLI::IsMember({"min", "1se"}));
    app.add_flag("--dense-interactions", cfg.dense_interactions, "Write zero interactions too");
    app.add_option("--scenario", scenario, "simulate: single, multi1 or multi2");
    app.add_option("--n", sim_n, "simulate: training rows (scenario default when absent)");
    app.add_option("--p", sim_p, "simulate: covariates (scenario default when absent)");
    app.add_option("--test-n", sim_test_n, "simulate: test rows (scenario default when absent)");
    app.add_option("--noise", sim_noise, "simulate: noise scale (scenario default when absent)");
    app.add_option("--sigma", sim_sigma, "simulate multi2: within-block covariance");
    app.add_option("--block", sim_block, "simulate multi2: covariance block size");
    app.add_option("--z-prob", sim_z_prob, "simulate multi2: modifier probability");

    const std::pair<const char*, Command> commands[] = {
        {"fit", Command::fit}, {"path", Command::path}, {"cv", Command::cv},
        {"simulate", Command::simulate}, {"predict", Command::predict}};
    const char* blurbs[] = {"Fit one lambda", "Fit the regularization path", "Cross-validate the path",
                            "Write a simulated data set", "Predict from coefficients.json"};
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < 5; ++i) subs.push_back(app.add_subcommand(commands[i].first, blurbs[i]));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_validation;
    }

    try {
        for (std::size_t i = 0; i < subs.size(); ++i)
            if (subs[i]->parsed()) cfg.command = commands[i].second;
        cfg.weight_rule = parse_weight_rule(weight_rule);
        hp.rho_adapt = parse_rho_adapt(rho_adapt);
        hp.linear_solver = parse_linear_solver(linear_solver);
        cfg.path.standardize = !no_standardize;
        cfg.use_one_se = select == "1se";
        cfg.sim = default_config(parse_scenario(scenario));
        cfg.sim.seed = cfg.seed;
        if (sim_n) cfg.sim.N = *sim_n;
        if (sim_p) cfg.sim.p = *sim_p;
        if (sim_test_n) cfg.sim.test_N = *sim_test_n;
        if (sim_noise) cfg.sim.noise_scale = *sim_noise;
        if (sim_sigma) cfg.sim.sigma = *sim_sigma;
        if (sim_block) cfg.sim.block = *sim_block;
        if (sim_z_prob) cfg.sim.z_prob = *sim_z_prob;
        if (cfg.folds < 2) throw ValidationError("--folds must be at least 2");
        if (cfg.threads < 1) throw ValidationError("--threads must be positive");
        cfg.path.validate();
        return run(cfg);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return exit_failure;
    }
}

} // namespace mplasso
