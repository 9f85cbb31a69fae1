#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "clutterscope/io.hpp"
#include "clutterscope/montecarlo.hpp"

namespace py = pybind11;
using namespace clutterscope;

namespace {

DataWindow make_window(const CMatrix& zp, const CMatrix& zs) {
    DataWindow w;
    w.zp = zp;
    w.zs = zs;
    w.validate();
    return w;
}

Model to_model(int m) {
    if (m != 1 && m != 2) {
        throw InvalidInput("model must be 1 or 2");
    }
    return static_cast<Model>(m);
}

ScenarioSpec make_spec(int model, int hypothesis, double cpr_db, std::vector<int> edges, int n,
                       int kp, int ks, double cnr_db, std::vector<double> angles, double alpha,
                       double beta) {
    ScenarioSpec s;
    s.model = to_model(model);
    s.hypothesis = hypothesis;
    s.cpr_db = cpr_db;
    s.edges = std::move(edges);
    s.kp = kp;
    s.ks = ks;
    s.alpha = alpha;
    s.beta = beta;
    s.basis.n = n;
    s.basis.cnr_db = cnr_db;
    s.basis.angles_deg = std::move(angles);
    return s;
}

ClassifyOptions make_options(std::optional<int> rank, int n_max) {
    ClassifyOptions o;
    o.rank = rank;
    o.n_max = n_max;
    return o;
}

}  // namespace

PYBIND11_MODULE(_clutterscope, m) {
    m.doc() = "Clutter-edge classification core";
    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<DegenerateGeometry>(m, "DegenerateGeometry", PyExc_ArithmeticError);

    m.def(
        "synthesize",
        [](int model, int hypothesis, double cpr_db, std::vector<int> edges, std::uint64_t seed,
           std::uint64_t stream, bool random_edges, int n, int kp, int ks, double cnr_db,
           std::vector<double> angles, double alpha, double beta) {
            ScenarioSpec s = make_spec(model, hypothesis, cpr_db, std::move(edges), n, kp, ks,
                                       cnr_db, std::move(angles), alpha, beta);
            RngStream rng(seed, stream);
            if (random_edges) {
                s.edges = draw_random_edges(s, rng);
            }
            const DataWindow w = synthesize_window(s, rng);
            return py::make_tuple(w.zp, w.zs, s.edges);
        },
        py::arg("model"), py::arg("hypothesis"), py::arg("cpr_db") = 0.0,
        py::arg("edges") = std::vector<int>{}, py::arg("seed") = 0, py::arg("stream") = 0,
        py::arg("random_edges") = false, py::arg("n") = 9, py::arg("kp") = 8, py::arg("ks") = 32,
        py::arg("cnr_db") = 30.0, py::arg("angles") = std::vector<double>{-20.0, 0.0, 10.0},
        py::arg("alpha") = 1.0, py::arg("beta") = 1.0,
        "Draw (zp, zs, edges) for one scenario.");

    m.def(
        "classify_json",
        [](const CMatrix& zp, const CMatrix& zs, int model, const std::string& rule,
           std::optional<double> rho, std::optional<int> rank, int n_max) {
            const ClassificationOutcome out =
                classify(make_window(zp, zs), to_model(model), parse_rule(rule, rho),
                         make_options(rank, n_max));
            return outcome_to_json(out).dump();
        },
        py::arg("zp"), py::arg("zs"), py::arg("model"), py::arg("rule") = "aic",
        py::arg("rho") = py::none(), py::arg("rank") = py::none(), py::arg("n_max") = 6);

    m.def(
        "loglik",
        [](const CMatrix& zp, const CMatrix& zs, int model, int hypothesis, int rank, int n_max) {
            const DataWindow w = make_window(zp, zs);
            const HypothesisScore s = to_model(model) == Model::kOne
                                          ? compressed_ll_model1(w, hypothesis, rank, n_max)
                                          : compressed_ll_model2(w, hypothesis, rank);
            return py::make_tuple(s.loglik, s.param_count, s.edges);
        },
        py::arg("zp"), py::arg("zs"), py::arg("model"), py::arg("hypothesis"), py::arg("rank"),
        py::arg("n_max") = 6, "(loglik, param_count, edges) of one hypothesis.");

    m.def(
        "estimate_rank",
        [](const CMatrix& zp, const CMatrix& zs, int m_upper, const std::string& rule,
           std::optional<double> rho) {
            return estimate_rank(make_window(zp, zs), m_upper, parse_rule(rule, rho));
        },
        py::arg("zp"), py::arg("zs"), py::arg("m_upper"), py::arg("rule") = "bic",
        py::arg("rho") = py::none());

    m.def(
        "run_experiment_json",
        [](int model, int hypothesis, std::vector<double> cpr_sweep, std::vector<std::string> rules,
           int trials, std::uint64_t seed, bool random_edges, bool auto_rank,
           std::vector<int> edges, double alpha, double beta, int n_max, int jobs) {
            ExperimentPlan p;
            p.base = make_spec(model, hypothesis, 0.0, std::move(edges), 9, 8, 32, 30.0,
                               {-20.0, 0.0, 10.0}, alpha, beta);
            p.cpr_sweep = std::move(cpr_sweep);
            p.rules.clear();
            for (const auto& r : rules) p.rules.push_back(parse_rule(r));
            p.trials = trials;
            p.master_seed = seed;
            p.edge_mode = random_edges ? EdgeMode::kRandom : EdgeMode::kFixed;
            p.rank_mode = auto_rank ? RankMode::kAuto : RankMode::kKnown;
            p.n_max = n_max;
            p.jobs = jobs;
            MetricReport rep;
            {
                py::gil_scoped_release release;
                rep = run_experiment(p);
            }
            return report_to_json(rep).dump();
        },
        py::arg("model"), py::arg("hypothesis"), py::arg("cpr_sweep") = std::vector<double>{0.0},
        py::arg("rules") = std::vector<std::string>{"aic", "gic2", "gic4", "bic"},
        py::arg("trials") = 100, py::arg("seed") = 0, py::arg("random_edges") = false,
        py::arg("auto_rank") = false, py::arg("edges") = std::vector<int>{},
        py::arg("alpha") = 1.0, py::arg("beta") = 1.0, py::arg("n_max") = 6,
        py::arg("jobs") = 1);

    m.def(
        "param_count",
        [](int model, int hypothesis, int r, int n) {
            return param_count(to_model(model), hypothesis, r, n);
        },
        py::arg("model"), py::arg("hypothesis"), py::arg("r"), py::arg("n"));

    m.def(
        "penalty_factor",
        [](const std::string& rule, std::optional<double> rho, int n, int kp, int ks) {
            return penalty_factor(parse_rule(rule, rho), n, kp, ks);
        },
        py::arg("rule"), py::arg("rho") = py::none(), py::arg("n") = 9, py::arg("kp") = 8,
        py::arg("ks") = 32);
}
