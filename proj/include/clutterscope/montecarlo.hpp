/**
 * @file montecarlo.hpp
 * @brief Seeded Monte Carlo runner and performance metrics.
 *
 * Trial t of every sweep point draws from RngStream(master_seed, t), so reports
 * are a pure function of the plan regardless of the worker count.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clutterscope/classify.hpp"

namespace clutterscope {

enum class EdgeMode { kFixed, kRandom };
enum class RankMode { kKnown, kAuto };

struct ExperimentPlan {
    ScenarioSpec base;               // cpr_db is overwritten per sweep point
    std::vector<double> cpr_sweep{0.0};
    std::vector<MosRule> rules{MosRule::aic(), MosRule::gic(2.0), MosRule::gic(4.0), MosRule::bic()};
    int trials = 1000;
    std::uint64_t master_seed = 0;
    EdgeMode edge_mode = EdgeMode::kFixed;
    RankMode rank_mode = RankMode::kKnown;
    std::optional<int> rank_upper;   // AUTO only
    int n_max = 6;
    int jobs = 1;                    // worker threads; <= 0 means hardware concurrency

    void validate() const;
};

/// Scores one synthesized window. The default scores all hypotheses for real.
using TrialScorer =
    std::function<ScoredWindow(const DataWindow&, Model, const ClassifyOptions&)>;

struct CellMetrics {
    double cpr_db = 0.0;
    MosRule rule;
    int hypothesis_true = 0;
    int trials = 0;
    double pcc = 0.0;
    double ci_halfwidth = 0.0;
    std::vector<std::vector<long>> confusion;  // [true][chosen]; only the true row is populated
    std::vector<double> rms_edges;             // one per edge of the true hypothesis
    int rms_included = 0;
    int rms_excluded = 0;                      // edge arity of the decision differed from the truth
    double rank_accuracy = 0.0;                // NaN in KNOWN mode
    std::vector<double> delta_psi;             // mean over trials, index n-1 for sweep n (Model 1)
};

struct MetricReport {
    Model model = Model::kOne;
    int hypothesis_true = 0;
    std::vector<CellMetrics> cells;  // sweep-major, rule-minor
};

MetricReport run_experiment(const ExperimentPlan& plan, const TrialScorer& scorer = {});

/// Per-index root-mean-square edge error; every record must have the same arity.
std::vector<double> rms_edges(const std::vector<std::pair<std::vector<int>, std::vector<int>>>& records);

/// |Psi(n) - Psi(n-1)| / |Psi(n)| for n = 1..len-1; +inf where Psi(n) = 0.
std::vector<double> convergence_residual(const std::vector<double>& objective_trace);

/// Half-width of the 95% Wilson score interval for `successes` out of `trials`.
double wilson_halfwidth(long successes, long trials);

/// Inclusive start:stop:step grid in dB.
std::vector<double> parse_cpr_grid(const std::string& text);

}  // namespace clutterscope
