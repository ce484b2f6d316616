#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mplasso/admm_multi.hpp"
#include "mplasso/admm_single.hpp"
#include "mplasso/path_cv.hpp"
#include "mplasso/prox_ops.hpp"
#include "mplasso/simgen.hpp"
#include "mplasso/tree_groups.hpp"

namespace py = pybind11;
using namespace mplasso;

namespace {

std::optional<ResponseTree> parse_tree(const std::optional<std::string>& tree) {
    if (!tree) return std::nullopt;
    return ResponseTree::from_json(nlohmann::json::parse(*tree));
}

std::optional<TreeGroups> groups_for(const DesignData& data, const std::optional<std::string>& tree,
                                     const std::string& weight_rule) {
    if (data.D() == 1) {
        if (tree) throw ValidationError("a response tree needs at least two responses");
        return std::nullopt;
    }
    const ResponseTree t = tree ? *parse_tree(tree) : cluster_responses(data.Y());
    return derive_groups(t, parse_weight_rule(weight_rule));
}

py::array_t<double> theta_array(const CoefficientSet& c) {
    py::array_t<double> out({c.p, c.K, c.D()});
    auto v = out.mutable_unchecked<3>();
    for (int j = 0; j < c.p; ++j)
        for (int k = 0; k < c.K; ++k)
            for (int d = 0; d < c.D(); ++d) v(j, k, d) = c.theta(j, k, d);
    return out;
}

Matrix beta_matrix(const CoefficientSet& c) {
    Matrix out(c.p, c.D());
    for (int j = 0; j < c.p; ++j)
        for (int d = 0; d < c.D(); ++d) out(j, d) = c.beta(j, d);
    return out;
}

py::dict design_dict(const DesignData& d) {
    py::dict out;
    out["X"] = d.X();
    out["Z"] = d.Z();
    out["Y"] = d.Y();
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pliable lasso and tree-guided multi-response pliable lasso fitted by ADMM";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<Hyperparameters>(m, "Hyperparameters")
        .def(py::init<>())
        .def_readwrite("lambda1", &Hyperparameters::lambda1)
        .def_readwrite("lambda2", &Hyperparameters::lambda2)
        .def_readwrite("lambda3", &Hyperparameters::lambda3)
        .def_readwrite("alpha", &Hyperparameters::alpha)
        .def_readwrite("rho_init", &Hyperparameters::rho_init)
        .def_readwrite("eps_abs", &Hyperparameters::eps_abs)
        .def_readwrite("eps_rel", &Hyperparameters::eps_rel)
        .def_readwrite("max_iter", &Hyperparameters::max_iter)
        .def_property(
            "rho_adapt", [](const Hyperparameters& h) { return to_string(h.rho_adapt); },
            [](Hyperparameters& h, const std::string& s) { h.rho_adapt = parse_rho_adapt(s); })
        .def_property(
            "linear_solver", [](const Hyperparameters& h) { return to_string(h.linear_solver); },
            [](Hyperparameters& h, const std::string& s) { h.linear_solver = parse_linear_solver(s); })
        .def("validate", &Hyperparameters::validate);

    py::class_<PathSpec>(m, "PathSpec")
        .def(py::init<>())
        .def_readwrite("n_lambda", &PathSpec::n_lambda)
        .def_readwrite("lambda_min_ratio", &PathSpec::lambda_min_ratio)
        .def_readwrite("lambdas", &PathSpec::lambdas)
        .def_readwrite("c1", &PathSpec::c1)
        .def_readwrite("c2", &PathSpec::c2)
        .def_readwrite("standardize", &PathSpec::standardize)
        .def_readwrite("base", &PathSpec::base)
        .def("at", &PathSpec::at, py::arg("lambda_"), py::arg("with_tree") = true);

    py::class_<CoefficientSet>(m, "CoefficientSet")
        .def_static("zeros", &CoefficientSet::zeros)
        .def_readonly("p", &CoefficientSet::p)
        .def_readonly("K", &CoefficientSet::K)
        .def_property_readonly("D", &CoefficientSet::D)
        .def_readwrite("beta0", &CoefficientSet::beta0)
        .def_readwrite("theta0", &CoefficientSet::theta0)
        .def_readwrite("B", &CoefficientSet::B, "p(K+1) x D; row j(K+1) is beta_j, rows j(K+1)+1.. are theta_j")
        .def_property_readonly("beta", &beta_matrix, "p x D main effects")
        .def_property_readonly("theta", &theta_array, "p x K x D interactions");

    py::class_<ConvergenceReport>(m, "ConvergenceReport")
        .def_readonly("converged", &ConvergenceReport::converged)
        .def_readonly("iterations", &ConvergenceReport::iterations)
        .def_readonly("r_norm", &ConvergenceReport::r_norm)
        .def_readonly("s_norm", &ConvergenceReport::s_norm)
        .def_readonly("eps_pri", &ConvergenceReport::eps_pri)
        .def_readonly("eps_dual", &ConvergenceReport::eps_dual)
        .def_readonly("rho", &ConvergenceReport::rho)
        .def_readonly("objective_trace", &ConvergenceReport::objective_trace);

    py::class_<PathPoint>(m, "PathPoint")
        .def_readonly("lambda_", &PathPoint::lambda)
        .def_readonly("coef", &PathPoint::coef)
        .def_readonly("report", &PathPoint::report)
        .def_readonly("objective", &PathPoint::objective)
        .def_readonly("nonzero_main", &PathPoint::nonzero_main)
        .def_readonly("nonzero_interactions", &PathPoint::nonzero_interactions);

    py::class_<PathResult>(m, "PathResult")
        .def_readonly("points", &PathResult::points)
        .def_readonly("lambda_max", &PathResult::lambda_max)
        .def("all_converged", &PathResult::all_converged);

    py::class_<MetricReport>(m, "MetricReport")
        .def_readonly("mse", &MetricReport::mse)
        .def_readonly("per_response_mse", &MetricReport::per_response_mse)
        .def_readonly("sensitivity", &MetricReport::sensitivity)
        .def_readonly("specificity", &MetricReport::specificity)
        .def_readonly("nonzero_main", &MetricReport::nonzero_count)
        .def_readonly("nonzero_interactions", &MetricReport::nonzero_interactions);

    py::class_<CvResult>(m, "CvResult")
        .def_readonly("lambdas", &CvResult::lambdas)
        .def_readonly("mean", &CvResult::mean)
        .def_readonly("sd", &CvResult::sd)
        .def_readonly("best_index", &CvResult::best_index)
        .def_readonly("one_se_index", &CvResult::one_se_index)
        .def_readonly("fold_of", &CvResult::fold_of)
        .def_readonly("warnings", &CvResult::warnings)
        .def_readonly("nonconverged", &CvResult::nonconverged)
        .def_readonly("full", &CvResult::full)
        .def_property_readonly("tree", [](const CvResult& r) -> std::optional<std::string> {
            if (!r.tree) return std::nullopt;
            return r.tree->to_json().dump();
        });

    m.def("soft_threshold", &soft_threshold, py::arg("x"), py::arg("t"));
    m.def("group_soft_threshold", &group_soft_threshold, py::arg("r"), py::arg("t"));

    m.def(
        "cluster_responses", [](const Matrix& Y) { return cluster_responses(Y).to_json().dump(); }, py::arg("Y"),
        "Complete-linkage tree over the columns of Y as a JSON string");

    m.def(
        "predict",
        [](const Matrix& X, const Matrix& Z, const CoefficientSet& coef) {
            return predict(DesignData(X, Z, Matrix::Zero(X.rows(), coef.D())), coef);
        },
        py::arg("X"), py::arg("Z"), py::arg("coef"));

    m.def(
        "objective",
        [](const Matrix& X, const Matrix& Z, const Matrix& Y, const CoefficientSet& coef, const Hyperparameters& hp,
           const std::optional<std::string>& tree, const std::string& weight_rule) {
            const DesignData data(X, Z, Y);
            const auto groups = groups_for(data, tree, weight_rule);
            return objective(data, coef, hp, groups ? &*groups : nullptr);
        },
        py::arg("X"), py::arg("Z"), py::arg("Y"), py::arg("coef"), py::arg("hp"), py::arg("tree") = py::none(),
        py::arg("weight_rule") = "sqrt_size");

    m.def(
        "lambda_max",
        [](const Matrix& X, const Matrix& Z, const Matrix& Y, const PathSpec& spec,
           const std::optional<std::string>& tree, const std::string& weight_rule) {
            const DesignData data(X, Z, Y);
            const auto groups = groups_for(data, tree, weight_rule);
            return lambda_path(data, [&] {
                PathSpec s = spec;
                s.lambdas.clear();
                s.n_lambda = 1;
                return s;
            }(), groups ? &*groups : nullptr).front();
        },
        py::arg("X"), py::arg("Z"), py::arg("Y"), py::arg("spec") = PathSpec{}, py::arg("tree") = py::none(),
        py::arg("weight_rule") = "sqrt_size", "Smallest lambda with an all-zero fit, on the standardized scale");

    m.def(
        "fit",
        [](const Matrix& X, const Matrix& Z, const Matrix& Y, const Hyperparameters& hp,
           const std::optional<std::string>& tree, const std::string& weight_rule, bool standardize) {
            const DesignData data(X, Z, Y);
            const auto groups = groups_for(data, tree, weight_rule);
            py::gil_scoped_release release;
            return fit_at(data, hp, groups ? &*groups : nullptr, standardize).points.front();
        },
        py::arg("X"), py::arg("Z"), py::arg("Y"), py::arg("hp"), py::arg("tree") = py::none(),
        py::arg("weight_rule") = "sqrt_size", py::arg("standardize") = true);

    m.def(
        "fit_path",
        [](const Matrix& X, const Matrix& Z, const Matrix& Y, const PathSpec& spec,
           const std::optional<std::string>& tree, const std::string& weight_rule) {
            const DesignData data(X, Z, Y);
            const auto groups = groups_for(data, tree, weight_rule);
            py::gil_scoped_release release;
            return fit_path(data, spec, groups ? &*groups : nullptr);
        },
        py::arg("X"), py::arg("Z"), py::arg("Y"), py::arg("spec") = PathSpec{}, py::arg("tree") = py::none(),
        py::arg("weight_rule") = "sqrt_size");

    m.def(
        "cv",
        [](const Matrix& X, const Matrix& Z, const Matrix& Y, const PathSpec& spec, int folds, std::uint64_t seed,
           int threads, const std::optional<std::string>& tree, const std::string& weight_rule) {
            const DesignData data(X, Z, Y);
            const auto t = parse_tree(tree);
            CvSpec cv;
            cv.folds = folds;
            cv.seed = seed;
            cv.threads = threads;
            cv.weight_rule = parse_weight_rule(weight_rule);
            py::gil_scoped_release release;
            return kfold_cv(data, spec, t ? &*t : nullptr, cv);
        },
        py::arg("X"), py::arg("Z"), py::arg("Y"), py::arg("spec") = PathSpec{}, py::arg("folds") = 5,
        py::arg("seed") = 1, py::arg("threads") = 1, py::arg("tree") = py::none(),
        py::arg("weight_rule") = "sqrt_size");

    m.def(
        "evaluate",
        [](const std::optional<CoefficientSet>& truth, const CoefficientSet& fitted, const Matrix& X, const Matrix& Z,
           const Matrix& Y) { return evaluate(truth ? &*truth : nullptr, fitted, DesignData(X, Z, Y)); },
        py::arg("truth"), py::arg("fitted"), py::arg("X"), py::arg("Z"), py::arg("Y"));

    m.def(
        "simulate",
        [](const std::string& scenario, std::uint64_t seed, std::optional<int> N, std::optional<int> p,
           std::optional<int> test_N, std::optional<double> noise_scale) {
            SimConfig cfg = default_config(parse_scenario(scenario));
            cfg.seed = seed;
            if (N) cfg.N = *N;
            if (p) cfg.p = *p;
            if (test_N) cfg.test_N = *test_N;
            if (noise_scale) cfg.noise_scale = *noise_scale;
            SimData sim = simulate(cfg);
            py::dict out = design_dict(sim.train);
            out["truth"] = sim.truth;
            out["test"] = sim.test ? py::object(design_dict(*sim.test)) : py::none();
            return out;
        },
        py::arg("scenario") = "single", py::arg("seed") = 1, py::arg("N") = py::none(), py::arg("p") = py::none(),
        py::arg("test_N") = py::none(), py::arg("noise_scale") = py::none(),
        "Simulated data set: dict with X, Z, Y, truth and test (None or a dict with X, Z, Y)");
}
