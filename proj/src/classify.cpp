#include "clutterscope/classify.hpp"

#include <cmath>
#include <numbers>

namespace clutterscope {

namespace {

void check_window_rank(const DataWindow& window, int r) {
    window.validate();
    const int upper = max_scorable_rank(window.n(), window.kp(), window.ks());
    if (window.ks() % 2 != 0) {
        throw InvalidInput("classify: K_S must be even");
    }
    if (r < 1 || r > upper) {
        throw InvalidInput("classify: rank " + std::to_string(r) + " outside [1, " +
                           std::to_string(upper) + "] for this window");
    }
}

Nuisance model1_nuisance(const PrimaryEstimates& est, std::vector<RVector> gammas) {
    Nuisance n;
    n.sigma2 = est.sigma2;
    n.lambda_sets = {est.lambdas};
    n.gamma_sets = std::move(gammas);
    n.degenerate = est.degenerate;
    return n;
}

Nuisance model2_nuisance(const Model2SegmentEstimates& est) {
    Nuisance n;
    n.sigma2 = est.sigma2;
    n.lambda_sets = est.lambda_sets;
    n.degenerate = est.degenerate;
    return n;
}

HypothesisScore make_score(Model model, int hyp, double loglik, int r, int n,
                           std::vector<int> edges, Nuisance nuisance) {
    HypothesisScore s;
    s.model = model;
    s.hypothesis = hyp;
    s.loglik = loglik;
    s.param_count = param_count(model, hyp, r, n);
    s.kappa = 0.0;
    s.penalized = -2.0 * loglik;
    s.edges = std::move(edges);
    s.nuisance = std::move(nuisance);
    return s;
}

// Exhaustive one-edge search; the first (lowest) edge wins ties.
template <typename Eval>
std::pair<int, Eval> best_single_edge(int lo, int hi, auto&& eval) {
    int best_k = lo;
    Eval best = eval(lo);
    for (int k = lo + 1; k <= hi; ++k) {
        Eval e = eval(k);
        if (e.loglik > best.loglik) {
            best = std::move(e);
            best_k = k;
        }
    }
    return {best_k, std::move(best)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Rules and parameter counts
// ---------------------------------------------------------------------------

void MosRule::validate() const {
    if (kind == MosKind::kGic && !(rho >= 1.0 && std::isfinite(rho))) {
        throw InvalidInput("GIC requires rho >= 1");
    }
}

std::string MosRule::label() const {
    switch (kind) {
        case MosKind::kAic:
            return "AIC";
        case MosKind::kBic:
            return "BIC";
        case MosKind::kGic: {
            if (rho == std::floor(rho)) {
                return "GIC" + std::to_string(static_cast<long long>(rho));
            }
            std::string s = std::to_string(rho);
            s.erase(s.find_last_not_of('0') + 1);
            return "GIC" + s;
        }
    }
    return "?";
}

MosRule parse_rule(const std::string& text, std::optional<double> rho) {
    std::string t;
    for (char c : text) {
        t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    MosRule rule;
    if (t == "aic") {
        rule = MosRule::aic();
    } else if (t == "bic") {
        rule = MosRule::bic();
    } else if (t == "gic") {
        if (!rho) {
            throw InvalidInput("rule 'gic' needs a rho value");
        }
        rule = MosRule::gic(*rho);
    } else if (t.rfind("gic", 0) == 0) {
        try {
            std::size_t used = 0;
            const double v = std::stod(t.substr(3), &used);
            if (used != t.size() - 3) {
                throw InvalidInput("bad rule");
            }
            rule = MosRule::gic(v);
        } catch (const std::logic_error&) {
            throw InvalidInput("unknown rule '" + text + "'");
        }
    } else {
        throw InvalidInput("unknown rule '" + text + "'");
    }
    rule.validate();
    return rule;
}

int clutter_params(int r, int n) { return r * (2 * n - r); }

int param_count(Model model, int hypothesis, int r, int n) {
    if (r < 1 || r >= n) {
        throw InvalidInput("param_count: need 1 <= r < N");
    }
    if (hypothesis < 0 || hypothesis >= hypothesis_count(model)) {
        throw InvalidInput("param_count: invalid hypothesis index");
    }
    const int p = clutter_params(r, n);
    if (model == Model::kOne) {
        constexpr int kExtraR[] = {0, 1, 1, 2};
        constexpr int kExtra[] = {1, 1, 2, 3};
        return p + kExtraR[hypothesis] * r + kExtra[hypothesis];
    }
    constexpr int kMultP[] = {1, 2, 2, 3, 3};
    constexpr int kExtra[] = {1, 1, 2, 3, 2};
    return kMultP[hypothesis] * p + kExtra[hypothesis];
}

double penalty_factor(const MosRule& rule, int n, int kp, int ks) {
    rule.validate();
    switch (rule.kind) {
        case MosKind::kAic:
            return 2.0;
        case MosKind::kGic:
            return 1.0 + rule.rho;
        case MosKind::kBic:
            return std::log(2.0 * n * (kp + ks));
    }
    return 0.0;
}

int max_scorable_rank(int n, int kp, int ks) {
    return std::min({n - 1, kp - 1, ks / 2 - 1});
}

// ---------------------------------------------------------------------------
// Model 1
// ---------------------------------------------------------------------------

Model1Context::Model1Context(const DataWindow& window, int r, int n_max)
    : n_(window.n()), kp_(window.kp()), ks_(window.ks()), r_(r), n_max_(n_max) {
    check_window_rank(window, r);
    if (n_max < 1) {
        throw InvalidInput("Model1Context: n_max must be positive");
    }
    est_ = primary_noise_and_eigs(window.zp, r);
    subspace_ = subspace_estimate(window.zp, window.zs);
    const CMatrix& u = subspace_.u_hat;
    primary_diag_ = (u.adjoint() * window.zp).cwiseAbs2().rowwise().sum();
    const Eigen::MatrixXd proj = (u.adjoint() * window.zs).cwiseAbs2();
    prefix_ = Eigen::MatrixXd::Zero(n_, ks_ + 1);
    for (int k = 0; k < ks_; ++k) {
        prefix_.col(k + 1) = prefix_.col(k) + proj.col(k);
    }
}

RVector Model1Context::secondary_diag(int first, int last) const {
    return prefix_.col(last) - prefix_.col(first - 1);
}

double Model1Context::constant_terms() const {
    const double k = kp_ + ks_;
    return -static_cast<double>(n_) * k * std::log(std::numbers::pi) -
           k * (n_ - r_) * std::log(est_.sigma2);
}

double Model1Context::homogeneous_terms(const RVector& s_diag, int count) const {
    return scaled_terms(s_diag, count, RVector::Ones(r_));
}

double Model1Context::scaled_terms(const RVector& s_diag, int count, const RVector& gammas) const {
    double h = 0.0;
    for (int i = 0; i < r_; ++i) {
        const double c = est_.sigma2 + gammas(i) * est_.lambdas(i);
        h -= count * std::log(c) + s_diag(i) / c;
    }
    h -= s_diag.tail(n_ - r_).sum() / est_.sigma2;
    return h;
}

GammaEstimate Model1Context::fit(const RVector& s_diag, int count) const {
    return cyclic_gamma_fit(s_diag, est_, count, n_max_);
}

Model1Context::Evaluation Model1Context::h0() const {
    Evaluation e;
    e.loglik = constant_terms() + homogeneous_terms(primary_diag_, kp_) +
               homogeneous_terms(secondary_diag(1, ks_), ks_);
    return e;
}

Model1Context::Evaluation Model1Context::h1() const {
    const RVector s = secondary_diag(1, ks_);
    GammaEstimate g = fit(s, ks_);
    Evaluation e;
    e.loglik = constant_terms() + homogeneous_terms(primary_diag_, kp_) +
               scaled_terms(s, ks_, g.gammas);
    e.gammas = {g.gammas};
    e.trace = std::move(g.objective_trace);
    return e;
}

Model1Context::Evaluation Model1Context::h2_at(int k) const {
    // The side containing the window centre shares the primary covariance.
    const bool leading_homogeneous = k > ks_ / 2;
    const int c1_first = leading_homogeneous ? 1 : k + 1;
    const int c1_last = leading_homogeneous ? k : ks_;
    const int c2_first = leading_homogeneous ? k + 1 : 1;
    const int c2_last = leading_homogeneous ? ks_ : k;
    const RVector s1 = secondary_diag(c1_first, c1_last);
    const RVector s2 = secondary_diag(c2_first, c2_last);
    const int n2 = c2_last - c2_first + 1;
    GammaEstimate g = fit(s2, n2);
    Evaluation e;
    e.loglik = constant_terms() + homogeneous_terms(primary_diag_, kp_) +
               homogeneous_terms(s1, c1_last - c1_first + 1) + scaled_terms(s2, n2, g.gammas);
    e.gammas = {g.gammas};
    e.trace = std::move(g.objective_trace);
    return e;
}

namespace {

struct Model1Side {
    double terms = 0.0;
    RVector gammas;
};

Model1Side model1_side(const Model1Context& ctx, int first, int last) {
    const RVector s = ctx.secondary_diag(first, last);
    const int count = last - first + 1;
    GammaEstimate g = ctx.fit(s, count);
    return {ctx.scaled_terms(s, count, g.gammas), std::move(g.gammas)};
}

double model1_two_edge_total(const Model1Context& ctx, const Model1Side& left,
                             const Model1Side& right, int k2, int k3, double base) {
    return base + ctx.homogeneous_terms(ctx.secondary_diag(k2 + 1, k3), k3 - k2) + left.terms +
           right.terms;
}

}  // namespace

Model1Context::Evaluation Model1Context::h3_at(int k2, int k3) const {
    const Model1Side left = model1_side(*this, 1, k2);
    const Model1Side right = model1_side(*this, k3 + 1, ks_);
    const double base = constant_terms() + homogeneous_terms(primary_diag_, kp_);
    Evaluation e;
    e.loglik = model1_two_edge_total(*this, left, right, k2, k3, base);
    e.gammas = {left.gammas, right.gammas};
    return e;
}

// ---------------------------------------------------------------------------
// Model 2
// ---------------------------------------------------------------------------

Model2Context::Model2Context(const DataWindow& window, int r)
    : n_(window.n()), kp_(window.kp()), ks_(window.ks()), r_(r) {
    check_window_rank(window, r);
    primary_gram_ = gram(window.zp);
    prefix_.reserve(static_cast<std::size_t>(ks_) + 1);
    prefix_.push_back(CMatrix::Zero(n_, n_));
    for (int k = 0; k < ks_; ++k) {
        prefix_.push_back(prefix_.back() + window.zs.col(k) * window.zs.col(k).adjoint());
    }
    leading_.resize(static_cast<std::size_t>(ks_) + 1);
    trailing_.resize(static_cast<std::size_t>(ks_) + 1);
    for (int k = r_; k <= ks_ - r_; ++k) {
        leading_[static_cast<std::size_t>(k)] = hermitian_eigenvalues(secondary_gram(1, k));
        trailing_[static_cast<std::size_t>(k)] = hermitian_eigenvalues(secondary_gram(k + 1, ks_));
    }
}

CMatrix Model2Context::secondary_gram(int first, int last) const {
    return prefix_[static_cast<std::size_t>(last)] - prefix_[static_cast<std::size_t>(first - 1)];
}

const RVector& Model2Context::leading_spectrum(int k) const {
    return leading_.at(static_cast<std::size_t>(k));
}

const RVector& Model2Context::trailing_spectrum(int k) const {
    return trailing_.at(static_cast<std::size_t>(k));
}

Model2Context::Evaluation Model2Context::evaluate(std::vector<SegmentSpectrum> segments) const {
    Evaluation e;
    e.estimates = model2_mles_from_spectra(segments, r_);
    e.loglik = model2_loglik(segments, e.estimates, r_);
    return e;
}

Model2Context::Evaluation Model2Context::h0() const {
    return evaluate({{hermitian_eigenvalues(primary_gram_ + prefix_.back()), kp_ + ks_}});
}

Model2Context::Evaluation Model2Context::h1() const {
    return evaluate({{hermitian_eigenvalues(primary_gram_), kp_},
                     {hermitian_eigenvalues(prefix_.back()), ks_}});
}

Model2Context::Evaluation Model2Context::h2_at(int k) const {
    if (k > ks_ / 2) {
        return evaluate({{hermitian_eigenvalues(primary_gram_ + secondary_gram(1, k)), kp_ + k},
                         {trailing_spectrum(k), ks_ - k}});
    }
    return evaluate(
        {{hermitian_eigenvalues(primary_gram_ + secondary_gram(k + 1, ks_)), kp_ + ks_ - k},
         {leading_spectrum(k), k}});
}

Model2Context::Evaluation Model2Context::h3_at(int k2, int k3) const {
    return evaluate(
        {{hermitian_eigenvalues(primary_gram_ + secondary_gram(k2 + 1, k3)), kp_ + k3 - k2},
         {leading_spectrum(k2), k2},
         {trailing_spectrum(k3), ks_ - k3}});
}

Model2Context::Evaluation Model2Context::h4_at(int k4) const {
    return evaluate({{hermitian_eigenvalues(primary_gram_), kp_},
                     {leading_spectrum(k4), k4},
                     {trailing_spectrum(k4), ks_ - k4}});
}

// ---------------------------------------------------------------------------
// Scoring and decisions
// ---------------------------------------------------------------------------

namespace {

void score_model1(const DataWindow& window, int r, int n_max, ScoredWindow& out) {
    const Model1Context ctx(window, r, n_max);
    const int n = window.n();
    const int ks = window.ks();
    const auto& est = ctx.estimates();

    out.scores.push_back(make_score(Model::kOne, 0, ctx.h0().loglik, r, n, {},
                                    model1_nuisance(est, {})));

    auto e1 = ctx.h1();
    out.gamma_objective_trace = e1.trace;
    out.scores.push_back(
        make_score(Model::kOne, 1, e1.loglik, r, n, {}, model1_nuisance(est, e1.gammas)));

    auto [k1, e2] = best_single_edge<Model1Context::Evaluation>(
        r, ks - r, [&](int k) { return ctx.h2_at(k); });
    out.scores.push_back(
        make_score(Model::kOne, 2, e2.loglik, r, n, {k1}, model1_nuisance(est, e2.gammas)));

    // Outer regions are fit independently, so cache them per edge.
    const int k2_lo = r, k2_hi = ks / 2, k3_lo = ks / 2 + 1, k3_hi = ks - r;
    std::vector<Model1Side> left, right;
    for (int k2 = k2_lo; k2 <= k2_hi; ++k2) {
        left.push_back(model1_side(ctx, 1, k2));
    }
    for (int k3 = k3_lo; k3 <= k3_hi; ++k3) {
        right.push_back(model1_side(ctx, k3 + 1, ks));
    }
    const double base = ctx.constant_terms() + ctx.homogeneous_terms(ctx.primary_diag(), window.kp());
    int best2 = k2_lo, best3 = k3_lo;
    double best = -std::numeric_limits<double>::infinity();
    for (int k2 = k2_lo; k2 <= k2_hi; ++k2) {
        for (int k3 = k3_lo; k3 <= k3_hi; ++k3) {
            const double v = model1_two_edge_total(ctx, left[static_cast<std::size_t>(k2 - k2_lo)],
                                                   right[static_cast<std::size_t>(k3 - k3_lo)], k2,
                                                   k3, base);
            if (v > best) {
                best = v;
                best2 = k2;
                best3 = k3;
            }
        }
    }
    out.scores.push_back(make_score(
        Model::kOne, 3, best, r, n, {best2, best3},
        model1_nuisance(est, {left[static_cast<std::size_t>(best2 - k2_lo)].gammas,
                              right[static_cast<std::size_t>(best3 - k3_lo)].gammas})));
}

void score_model2(const DataWindow& window, int r, ScoredWindow& out) {
    const Model2Context ctx(window, r);
    const int n = window.n();
    const int ks = window.ks();
    using Eval = Model2Context::Evaluation;

    const Eval e0 = ctx.h0();
    out.scores.push_back(make_score(Model::kTwo, 0, e0.loglik, r, n, {}, model2_nuisance(e0.estimates)));
    const Eval e1 = ctx.h1();
    out.scores.push_back(make_score(Model::kTwo, 1, e1.loglik, r, n, {}, model2_nuisance(e1.estimates)));

    auto [k1, e2] = best_single_edge<Eval>(r, ks - r, [&](int k) { return ctx.h2_at(k); });
    out.scores.push_back(
        make_score(Model::kTwo, 2, e2.loglik, r, n, {k1}, model2_nuisance(e2.estimates)));

    int best2 = r, best3 = ks / 2 + 1;
    Eval best3_eval = ctx.h3_at(best2, best3);
    for (int k2 = r; k2 <= ks / 2; ++k2) {
        for (int k3 = ks / 2 + 1; k3 <= ks - r; ++k3) {
            Eval e = ctx.h3_at(k2, k3);
            if (e.loglik > best3_eval.loglik) {
                best3_eval = std::move(e);
                best2 = k2;
                best3 = k3;
            }
        }
    }
    out.scores.push_back(make_score(Model::kTwo, 3, best3_eval.loglik, r, n, {best2, best3},
                                    model2_nuisance(best3_eval.estimates)));

    auto [k4, e4] = best_single_edge<Eval>(r, ks - r, [&](int k) { return ctx.h4_at(k); });
    out.scores.push_back(
        make_score(Model::kTwo, 4, e4.loglik, r, n, {k4}, model2_nuisance(e4.estimates)));
}

}  // namespace

ScoredWindow score_hypotheses(const DataWindow& window, Model model, const ClassifyOptions& opts) {
    window.validate();
    ScoredWindow out;
    out.model = model;
    out.n = window.n();
    out.kp = window.kp();
    out.ks = window.ks();
    if (opts.rank) {
        out.r = *opts.rank;
    } else {
        const int cap = max_scorable_rank(out.n, out.kp, out.ks);
        const int upper = std::min(opts.rank_upper.value_or(out.n - 1), cap);
        if (upper < 1) {
            throw InvalidInput("classify: window too small to estimate the clutter rank");
        }
        out.r = estimate_rank(window, upper, MosRule::bic());
        out.r_estimated = true;
    }
    if (model == Model::kOne) {
        score_model1(window, out.r, opts.n_max, out);
    } else {
        score_model2(window, out.r, out);
    }
    return out;
}

ClassificationOutcome decide(const ScoredWindow& scored, double kappa) {
    ClassificationOutcome out;
    out.model = scored.model;
    out.r_used = scored.r;
    out.r_estimated = scored.r_estimated;
    out.scores = scored.scores;
    double best = std::numeric_limits<double>::infinity();
    for (auto& s : out.scores) {
        s.kappa = kappa;
        s.penalized = -2.0 * s.loglik + kappa * s.param_count;
        if (s.penalized < best) {
            best = s.penalized;
            out.chosen = s.hypothesis;
        }
    }
    return out;
}

ClassificationOutcome decide(const ScoredWindow& scored, const MosRule& rule) {
    return decide(scored, penalty_factor(rule, scored.n, scored.kp, scored.ks));
}

HypothesisScore compressed_ll_model1(const DataWindow& window, int hypothesis, int r, int n_max) {
    if (hypothesis < 0 || hypothesis > 3) {
        throw InvalidInput("compressed_ll_model1: hypothesis must be 0..3");
    }
    ScoredWindow scored;
    score_model1(window, r, n_max, scored);
    return scored.scores[static_cast<std::size_t>(hypothesis)];
}

HypothesisScore compressed_ll_model2(const DataWindow& window, int hypothesis, int r) {
    if (hypothesis < 0 || hypothesis > 4) {
        throw InvalidInput("compressed_ll_model2: hypothesis must be 0..4");
    }
    ScoredWindow scored;
    score_model2(window, r, scored);
    return scored.scores[static_cast<std::size_t>(hypothesis)];
}

ClassificationOutcome classify(const DataWindow& window, Model model, const MosRule& rule,
                               const ClassifyOptions& opts) {
    rule.validate();
    return decide(score_hypotheses(window, model, opts), rule);
}

double homogeneous_loglik(const RVector& mu_all, int k_total, int r) {
    const SegmentSpectrum seg{mu_all, k_total};
    const auto est = model2_mles_from_spectra({&seg, 1}, r);
    return model2_loglik({&seg, 1}, est, r);
}

int estimate_rank(const DataWindow& window, int m_upper, const MosRule& rule) {
    window.validate();
    const int n = window.n();
    if (m_upper < 1 || m_upper >= n) {
        throw InvalidInput("estimate_rank: need 1 <= M < N");
    }
    const double kappa = penalty_factor(rule, n, window.kp(), window.ks());
    const int k_total = window.kp() + window.ks();
    const RVector mu = hermitian_eigenvalues(gram(window.zp) + gram(window.zs));
    int best_r = 1;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 1; r <= m_upper; ++r) {
        const double v = -2.0 * homogeneous_loglik(mu, k_total, r) + kappa * clutter_params(r, n);
        if (v < best) {
            best = v;
            best_r = r;
        }
    }
    return best_r;
}

}  // namespace clutterscope
