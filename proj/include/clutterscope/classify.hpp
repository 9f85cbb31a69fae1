/**
 * @file classify.hpp
 * @brief Penalized-likelihood classification of the reference window.
 *
 * Every hypothesis gets a compressed log-likelihood h (all constants of the
 * complex Gaussian log-density kept) and a parameter count; a model-order
 * selection rule picks argmin { -2 h + kappa * count }. Edge positions are found
 * by exhaustive search over their admissible grids.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clutterscope/estimate.hpp"
#include "clutterscope/scenario.hpp"

namespace clutterscope {

enum class MosKind { kAic, kGic, kBic };

struct MosRule {
    MosKind kind = MosKind::kAic;
    double rho = 0.0;  // GIC only, >= 1

    static MosRule aic() { return {MosKind::kAic, 0.0}; }
    static MosRule gic(double rho) { return {MosKind::kGic, rho}; }
    static MosRule bic() { return {MosKind::kBic, 0.0}; }

    void validate() const;
    std::string label() const;  // "AIC", "GIC2", "GIC4", "BIC", ...
    bool operator==(const MosRule&) const = default;
};

/// Parses "aic", "bic", "gic" (needs rho), or "gicN" for GIC with rho = N.
MosRule parse_rule(const std::string& text, std::optional<double> rho = std::nullopt);

/// Real parameter count of a rank-r N x N Hermitian PSD matrix: r (2N - r).
int clutter_params(int r, int n);

int param_count(Model model, int hypothesis, int r, int n);

double penalty_factor(const MosRule& rule, int n, int kp, int ks);

struct Nuisance {
    double sigma2 = 0.0;
    std::vector<RVector> lambda_sets;  // Model 1: primary lambdas; Model 2: one per region
    std::vector<RVector> gamma_sets;   // Model 1 only
    bool degenerate = false;
};

struct HypothesisScore {
    Model model = Model::kOne;
    int hypothesis = 0;
    double loglik = 0.0;
    int param_count = 0;
    double kappa = 0.0;
    double penalized = 0.0;  // -2 loglik + kappa * param_count
    std::vector<int> edges;
    Nuisance nuisance;
};

/// Unpenalized hypothesis scores for one window; decisions for any rule derive from it.
struct ScoredWindow {
    Model model = Model::kOne;
    int r = 1;
    bool r_estimated = false;
    int n = 0;
    int kp = 0;
    int ks = 0;
    std::vector<HypothesisScore> scores;        // penalized fields unset
    std::vector<double> gamma_objective_trace;  // Model 1: H_{I,1} cyclic fit
};

struct ClassificationOutcome {
    Model model = Model::kOne;
    int chosen = 0;
    std::vector<HypothesisScore> scores;
    int r_used = 1;
    bool r_estimated = false;

    const HypothesisScore& chosen_score() const { return scores[static_cast<std::size_t>(chosen)]; }
};

/**
 * Precomputed Model 1 statistics: shared noise/eigenvalue estimates from primary
 * data, the subspace estimate from all snapshots, and prefix sums of the
 * per-snapshot projected powers |U^H r_k|^2 so any secondary range costs O(N).
 */
class Model1Context {
public:
    Model1Context(const DataWindow& window, int r, int n_max = 6);

    struct Evaluation {
        double loglik = 0.0;
        std::vector<RVector> gammas;
        std::vector<double> trace;
    };

    Evaluation h0() const;
    Evaluation h1() const;
    /// Inner objective of the one-edge hypothesis at edge k.
    Evaluation h2_at(int k) const;
    /// Inner objective of the two-edge hypothesis at edges (k2, k3).
    Evaluation h3_at(int k2, int k3) const;

    /// Diagonal of U^H (sum over secondary snapshots first..last, 1-based) U.
    RVector secondary_diag(int first, int last) const;
    const RVector& primary_diag() const { return primary_diag_; }
    const PrimaryEstimates& estimates() const { return est_; }
    const SubspaceEstimate& subspace() const { return subspace_; }
    int rank() const { return r_; }
    int n_max() const { return n_max_; }

    // Building blocks (exposed for tests).
    double constant_terms() const;
    double homogeneous_terms(const RVector& s_diag, int count) const;
    double scaled_terms(const RVector& s_diag, int count, const RVector& gammas) const;
    GammaEstimate fit(const RVector& s_diag, int count) const;

private:
    int n_, kp_, ks_, r_, n_max_;
    PrimaryEstimates est_;
    SubspaceEstimate subspace_;
    RVector primary_diag_;
    Eigen::MatrixXd prefix_;  // N x (K_S + 1)
};

/// Model 2 statistics: primary Gram plus prefix Grams G(k) = sum_{j<=k} r_j r_j^H.
class Model2Context {
public:
    Model2Context(const DataWindow& window, int r);

    struct Evaluation {
        double loglik = 0.0;
        Model2SegmentEstimates estimates;
    };

    Evaluation h0() const;
    Evaluation h1() const;
    Evaluation h2_at(int k) const;
    Evaluation h3_at(int k2, int k3) const;
    Evaluation h4_at(int k4) const;

    /// Gram of secondary snapshots first..last (1-based, inclusive).
    CMatrix secondary_gram(int first, int last) const;
    const CMatrix& primary_gram() const { return primary_gram_; }
    int rank() const { return r_; }

private:
    Evaluation evaluate(std::vector<SegmentSpectrum> segments) const;
    const RVector& leading_spectrum(int k) const;   // snapshots 1..k
    const RVector& trailing_spectrum(int k) const;  // snapshots k+1..K_S

    int n_, kp_, ks_, r_;
    CMatrix primary_gram_;
    std::vector<CMatrix> prefix_;
    std::vector<RVector> leading_;
    std::vector<RVector> trailing_;
};

struct ClassifyOptions {
    int n_max = 6;                       // cyclic-fit sweeps (Model 1)
    std::optional<int> rank;             // nullopt -> estimate it
    std::optional<int> rank_upper;       // rank-stage search bound; default N - 1
};

ScoredWindow score_hypotheses(const DataWindow& window, Model model, const ClassifyOptions& opts);

/// Applies a penalty factor to precomputed scores; ties resolve to the lowest index.
ClassificationOutcome decide(const ScoredWindow& scored, double kappa);
ClassificationOutcome decide(const ScoredWindow& scored, const MosRule& rule);

HypothesisScore compressed_ll_model1(const DataWindow& window, int hypothesis, int r,
                                     int n_max = 6);
HypothesisScore compressed_ll_model2(const DataWindow& window, int hypothesis, int r);

ClassificationOutcome classify(const DataWindow& window, Model model, const MosRule& rule,
                               const ClassifyOptions& opts = {});

/// Homogeneous compressed log-likelihood of all K_P + K_S snapshots at rank r.
double homogeneous_loglik(const RVector& mu_all, int k_total, int r);

/// argmin_{r = 1..m_upper} { -2 h_{II,0}(r) + kappa p(r) }; ties go to the smaller rank.
int estimate_rank(const DataWindow& window, int m_upper, const MosRule& rule);

/// Largest rank every hypothesis can be scored at for this window geometry.
int max_scorable_rank(int n, int kp, int ks);

}  // namespace clutterscope
