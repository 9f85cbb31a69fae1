#include "properties.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "clutterscope/io.hpp"
#include "clutterscope/montecarlo.hpp"

namespace clutterscope::testing {

namespace {

double uniform(RngStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); }

RVector cumulative(const RVector& taus) {
    RVector g(taus.size());
    double acc = 0.0;
    for (Eigen::Index i = taus.size() - 1; i >= 0; --i) {
        acc += taus(i);
        g(i) = acc;
    }
    return g;
}

// Random instance of the per-region gamma problem.
struct GammaInstance {
    PrimaryEstimates est;
    RVector s;
    int k = 1;
};

GammaInstance random_gamma_instance(RngStream& rng, int r) {
    GammaInstance g;
    g.est.sigma2 = std::pow(10.0, uniform(rng, -1.0, 1.0));
    std::vector<double> l(static_cast<std::size_t>(r));
    for (double& x : l) {
        x = rng.uniform01() < 0.1 ? 0.0 : std::pow(10.0, uniform(rng, -1.0, 3.0));
    }
    std::sort(l.begin(), l.end(), std::greater<>());
    g.est.lambdas = Eigen::Map<RVector>(l.data(), r);
    g.k = static_cast<int>(rng.uniform_int(1, 40));
    g.s.resize(r + 2);
    for (int i = 0; i < r + 2; ++i) {
        const double lam = i < r ? g.est.lambdas(i) : 0.0;
        const double scale = std::pow(10.0, uniform(rng, -1.5, 1.5));
        g.s(i) = rng.uniform01() < 0.05 ? 0.0 : g.k * (g.est.sigma2 + scale * lam) * uniform(rng, 0.3, 2.0);
    }
    return g;
}

std::string fmt(const char* what, double got, double want) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": got " << got << ", want " << want;
    return os.str();
}

// Exact CN log-likelihood of `count` snapshots with Gram g under R = s2 I + lam u u^H.
double exact_loglik(const Eigen::Matrix2cd& g, int count, const Eigen::Vector2cd& u, double s2,
                    double lam) {
    const Eigen::Matrix2cd r = s2 * Eigen::Matrix2cd::Identity() + lam * u * u.adjoint();
    const double logdet = std::log(r.determinant().real());
    const double quad = (r.inverse() * g).trace().real();
    return -count * (2.0 * std::log(std::numbers::pi) + logdet) - quad;
}

bool any_clamped(const Model2SegmentEstimates& est) {
    for (const auto& l : est.lambda_sets) {
        if ((l.array() <= 0.0).any()) {
            return true;
        }
    }
    return est.degenerate;
}

}  // namespace

DataWindow white_window(int n, int kp, int ks, std::uint64_t seed, std::uint64_t stream) {
    RngStream rng(seed, stream);
    const CMatrix f = CMatrix::Identity(n, n);
    DataWindow w;
    w.zp = sample_snapshots(f, kp, rng);
    w.zs = sample_snapshots(f, ks, rng);
    return w;
}

CMatrix random_unitary(int n, RngStream& rng) {
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            a(i, j) = {rng.standard_normal(), rng.standard_normal()};
        }
    }
    Eigen::HouseholderQR<CMatrix> qr(a);
    return qr.householderQ() * CMatrix::Identity(n, n);
}

PropertyResult coordinate_ascent_monotone(int instances) {
    RngStream rng(20240601, 0);
    for (int t = 0; t < instances; ++t) {
        const int r = static_cast<int>(rng.uniform_int(1, 5));
        const GammaInstance g = random_gamma_instance(rng, r);
        RVector taus = RVector::Zero(r);
        taus(r - 1) = 1.0;
        double prev = gamma_objective(cumulative(taus), g.s, g.est, g.k);
        for (int sweep = 0; sweep < 6; ++sweep) {
            for (int h = 0; h < r; ++h) {
                taus(h) = coordinate_update(h, taus, g.s, g.est, g.k);
                const double cur = gamma_objective(cumulative(taus), g.s, g.est, g.k);
                if (!(cur >= prev - 1e-12)) {
                    return {false, "instance " + std::to_string(t) + ", " +
                                       fmt("objective after update", cur, prev)};
                }
                prev = cur;
            }
        }
    }
    return {true, std::to_string(instances) + " instances"};
}

PropertyResult rank_one_closed_form(int instances) {
    RngStream rng(20240602, 0);
    double worst = 0.0;
    for (int t = 0; t < instances; ++t) {
        GammaInstance g = random_gamma_instance(rng, 1);
        if (g.est.lambdas(0) <= 0.0) {
            g.est.lambdas(0) = 1.0;
        }
        const GammaEstimate fit = cyclic_gamma_fit(g.s, g.est, g.k, 1);
        const double want =
            std::max((g.s(0) / g.k - g.est.sigma2) / g.est.lambdas(0), 0.0);
        const double err = std::abs(fit.gammas(0) - want);
        worst = std::max(worst, err);
        if (err > 1e-10) {
            return {false, "instance " + std::to_string(t) + ", " + fmt("gamma", fit.gammas(0), want)};
        }
    }
    return {true, std::to_string(instances) + " instances, max error " + std::to_string(worst)};
}

PropertyResult model2_grid_oracle() {
    constexpr int kGrid = 2000;
    const CVector v = steering_vector(25.0, 2);
    const CVector w = steering_vector(-40.0, 2);
    for (std::uint64_t stream = 0; stream < 50; ++stream) {
        RngStream rng(20240603, stream);
        auto factor = [](const CVector& u, double power) {
            EigenSystem e = hermitian_eig(power * u * u.adjoint());
            e.values.array() += 1.0;
            return covariance_factor(e);
        };
        const CMatrix z1 = sample_snapshots(factor(v, 20.0), 3, rng);
        const CMatrix z2 = sample_snapshots(factor(w, 6.0), 3, rng);
        const GramBlock blocks[] = {{gram(z1), 3}, {gram(z2), 3}};
        const Model2SegmentEstimates est = model2_segment_mles(blocks, 1);
        if (any_clamped(est)) {
            continue;
        }

        const Eigen::Matrix2cd g1 = blocks[0].gram;
        const Eigen::Matrix2cd g2 = blocks[1].gram;
        const Eigen::Vector2cd u1 = hermitian_eig(blocks[0].gram).vectors.col(0);
        const Eigen::Vector2cd u2 = hermitian_eig(blocks[1].gram).vectors.col(0);
        const double p = (g1.trace().real() + g2.trace().real()) / 12.0;

        auto grid = [p](double lo_dec, double hi_dec) {
            std::vector<double> out(kGrid);
            for (int i = 0; i < kGrid; ++i) {
                out[static_cast<std::size_t>(i)] =
                    p * std::pow(10.0, lo_dec + (hi_dec - lo_dec) * i / (kGrid - 1));
            }
            return out;
        };
        const auto s2_grid = grid(-3.0, 2.0);
        const auto lam_grid = grid(-3.0, 3.0);

        double best = -std::numeric_limits<double>::infinity();
        double best_s2 = 0.0, best_l1 = 0.0, best_l2 = 0.0;
        for (double s2 : s2_grid) {
            // Given s2 the two segment terms separate in lambda.
            double m1 = -std::numeric_limits<double>::infinity(), a1 = 0.0;
            double m2 = -std::numeric_limits<double>::infinity(), a2 = 0.0;
            for (double lam : lam_grid) {
                const double f1 = exact_loglik(g1, 3, u1, s2, lam);
                const double f2 = exact_loglik(g2, 3, u2, s2, lam);
                if (f1 > m1) {
                    m1 = f1;
                    a1 = lam;
                }
                if (f2 > m2) {
                    m2 = f2;
                    a2 = lam;
                }
            }
            if (m1 + m2 > best) {
                best = m1 + m2;
                best_s2 = s2;
                best_l1 = a1;
                best_l2 = a2;
            }
        }
        auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
        const double e_s2 = rel(best_s2, est.sigma2);
        const double e_l1 = rel(best_l1, est.lambda_sets[0](0));
        const double e_l2 = rel(best_l2, est.lambda_sets[1](0));
        std::ostringstream os;
        os << "relative errors sigma2 " << e_s2 << ", lambda1 " << e_l1 << ", lambda2 " << e_l2;
        return {e_s2 <= 1e-2 && e_l1 <= 1e-2 && e_l2 <= 1e-2, os.str()};
    }
    return {false, "no unclamped instance found"};
}

PropertyResult model2_nested_ordering(int instances) {
    RngStream rng(20240604, 0);
    int checked = 0;
    for (int t = 0; t < instances; ++t) {
        const int n = static_cast<int>(rng.uniform_int(3, 8));
        const int r = static_cast<int>(rng.uniform_int(1, static_cast<std::uint64_t>(n - 1)));
        const int c1 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n), 30));
        const int c2 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n), 30));
        CMatrix f1 = CMatrix::Identity(n, n);
        CMatrix f2 = CMatrix::Identity(n, n);
        f1(0, 0) = uniform(rng, 1.0, 10.0);
        f2(0, 0) = uniform(rng, 1.0, 10.0);
        const CMatrix z1 = sample_snapshots(f1, c1, rng);
        const CMatrix z2 = sample_snapshots(f2, c2, rng);

        const SegmentSpectrum merged{hermitian_eigenvalues(gram(z1) + gram(z2)), c1 + c2};
        const SegmentSpectrum split[] = {{hermitian_eigenvalues(gram(z1)), c1},
                                         {hermitian_eigenvalues(gram(z2)), c2}};
        const auto e1 = model2_mles_from_spectra({&merged, 1}, r);
        const auto e2 = model2_mles_from_spectra(split, r);
        if (any_clamped(e1) || any_clamped(e2)) {
            continue;
        }
        ++checked;
        const double h1 = model2_loglik({&merged, 1}, e1, r);
        const double h2 = model2_loglik(split, e2, r);
        if (!(h2 >= h1 - 1e-9)) {
            return {false, "instance " + std::to_string(t) + ", " + fmt("two-segment loglik", h2, h1)};
        }
    }
    if (checked < instances / 2) {
        return {false, "too few unclamped instances: " + std::to_string(checked)};
    }
    return {true, std::to_string(checked) + " unclamped instances"};
}

PropertyResult grid_search_exhaustive(int windows) {
    ScenarioSpec base;
    base.basis.n = 5;
    base.basis.angles_deg = {-20.0, 10.0};
    base.kp = 6;
    base.ks = 12;
    base.cpr_db = 8.0;
    const int r = base.rank();
    const int ks = base.ks;
    for (int t = 0; t < windows; ++t) {
        RngStream rng(20240605, static_cast<std::uint64_t>(t));
        ScenarioSpec s = base;
        s.model = t % 2 == 0 ? Model::kOne : Model::kTwo;
        s.hypothesis = static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(hypothesis_count(s.model) - 1)));
        s.edges = draw_random_edges(s, rng);
        const DataWindow w = synthesize_window(s, rng);
        ClassifyOptions opts;
        opts.rank = r;
        const ScoredWindow scored = score_hypotheses(w, s.model, opts);
        const std::string tag = "window " + std::to_string(t);

        auto check_one = [&](int hyp, auto&& eval) -> PropertyResult {
            double best = -std::numeric_limits<double>::infinity();
            int arg = -1;
            for (int k = r; k <= ks - r; ++k) {
                const double v = eval(k);
                if (v > best) {
                    best = v;
                    arg = k;
                }
            }
            const auto& sc = scored.scores[static_cast<std::size_t>(hyp)];
            if (sc.loglik != best || sc.edges != std::vector<int>{arg}) {
                return {false, tag + ", hypothesis " + std::to_string(hyp) + ": " +
                                   fmt("loglik", sc.loglik, best)};
            }
            return {};
        };
        auto check_two = [&](auto&& eval) -> PropertyResult {
            double best = -std::numeric_limits<double>::infinity();
            std::vector<int> arg;
            for (int k2 = r; k2 <= ks / 2; ++k2) {
                for (int k3 = ks / 2 + 1; k3 <= ks - r; ++k3) {
                    const double v = eval(k2, k3);
                    if (v > best) {
                        best = v;
                        arg = {k2, k3};
                    }
                }
            }
            const auto& sc = scored.scores[3];
            if (sc.loglik != best || sc.edges != arg) {
                return {false, tag + ", two-edge hypothesis: " + fmt("loglik", sc.loglik, best)};
            }
            return {};
        };

        PropertyResult res;
        if (s.model == Model::kOne) {
            const Model1Context ctx(w, r);
            res = check_one(2, [&](int k) { return ctx.h2_at(k).loglik; });
            if (res.ok) {
                res = check_two([&](int a, int b) { return ctx.h3_at(a, b).loglik; });
            }
        } else {
            const Model2Context ctx(w, r);
            res = check_one(2, [&](int k) { return ctx.h2_at(k).loglik; });
            if (res.ok) {
                res = check_two([&](int a, int b) { return ctx.h3_at(a, b).loglik; });
            }
            if (res.ok) {
                res = check_one(4, [&](int k) { return ctx.h4_at(k).loglik; });
            }
        }
        if (!res.ok) {
            return res;
        }
    }
    return {true, std::to_string(windows) + " windows with K_S = 12"};
}

PropertyResult model2_unitary_invariance(int windows) {
    const MosRule rules[] = {MosRule::aic(), MosRule::gic(2.0), MosRule::gic(4.0), MosRule::bic()};
    double worst = 0.0;
    for (int t = 0; t < windows; ++t) {
        RngStream rng(20240606, static_cast<std::uint64_t>(t));
        ScenarioSpec s;
        s.model = Model::kTwo;
        s.hypothesis = t % 5;
        s.cpr_db = 10.0;
        s.edges = draw_random_edges(s, rng);
        DataWindow w = synthesize_window(s, rng);
        ClassifyOptions opts;
        opts.rank = s.rank();
        const ScoredWindow a = score_hypotheses(w, Model::kTwo, opts);
        const CMatrix q = random_unitary(w.n(), rng);
        w.zp = q * w.zp;
        w.zs = q * w.zs;
        const ScoredWindow b = score_hypotheses(w, Model::kTwo, opts);
        for (std::size_t i = 0; i < a.scores.size(); ++i) {
            const double d = std::abs(a.scores[i].loglik - b.scores[i].loglik);
            worst = std::max(worst, d);
            if (d > 1e-8) {
                return {false, "window " + std::to_string(t) + ": " +
                                   fmt("rotated loglik", b.scores[i].loglik, a.scores[i].loglik)};
            }
        }
        for (const auto& rule : rules) {
            const auto da = decide(a, rule);
            const auto db = decide(b, rule);
            if (da.chosen != db.chosen || da.chosen_score().edges != db.chosen_score().edges) {
                return {false, "window " + std::to_string(t) + ": decision flipped under " + rule.label()};
            }
        }
    }
    std::ostringstream os;
    os << windows << " windows, zero flips, max |dh| " << worst;
    return {true, os.str()};
}

PropertyResult experiment_determinism() {
    auto plans = [] {
        std::vector<ExperimentPlan> out;
        ExperimentPlan p1;
        p1.base.model = Model::kOne;
        p1.base.hypothesis = 2;
        p1.edge_mode = EdgeMode::kRandom;
        p1.cpr_sweep = {5.0, 15.0};
        p1.trials = 40;
        p1.master_seed = 99;
        out.push_back(p1);
        ExperimentPlan p2;
        p2.base.model = Model::kTwo;
        p2.base.hypothesis = 3;
        p2.base.edges = {8, 24};
        p2.cpr_sweep = {10.0};
        p2.trials = 30;
        p2.master_seed = 7;
        p2.rank_mode = RankMode::kAuto;
        out.push_back(p2);
        return out;
    }();
    for (ExperimentPlan plan : plans) {
        plan.jobs = 1;
        const std::string serial = report_to_json(run_experiment(plan)).dump();
        const std::string again = report_to_json(run_experiment(plan)).dump();
        plan.jobs = 4;
        const std::string parallel = report_to_json(run_experiment(plan)).dump();
        plan.jobs = 3;
        const std::string parallel3 = report_to_json(run_experiment(plan)).dump();
        if (serial != again) {
            return {false, "serial reruns differ"};
        }
        if (serial != parallel || serial != parallel3) {
            return {false, "parallel run differs from serial"};
        }
    }
    return {true, "serial, repeated and 3/4-worker reports identical"};
}

}  // namespace clutterscope::testing
