#include "clutterscope/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace clutterscope {

namespace {

struct RuleDecision {
    int chosen = 0;
    std::vector<int> edges;
};

struct TrialRecord {
    std::vector<int> true_edges;
    std::vector<RuleDecision> decisions;  // one per rule
    int r_used = 0;
    std::vector<double> residuals;
};

TrialRecord run_trial(const ExperimentPlan& plan, const ScenarioSpec& spec, int t,
                      const TrialScorer& scorer) {
    RngStream rng(plan.master_seed, static_cast<std::uint64_t>(t));
    ScenarioSpec s = spec;
    if (plan.edge_mode == EdgeMode::kRandom) {
        s.edges = draw_random_edges(s, rng);
    }
    const DataWindow w = synthesize_window(s, rng);

    ClassifyOptions opts;
    opts.n_max = plan.n_max;
    if (plan.rank_mode == RankMode::kKnown) {
        opts.rank = s.rank();
    } else {
        opts.rank_upper = plan.rank_upper;
    }
    const ScoredWindow scored = scorer ? scorer(w, s.model, opts) : score_hypotheses(w, s.model, opts);

    TrialRecord rec;
    rec.true_edges = s.edges;
    rec.r_used = scored.r;
    for (const MosRule& rule : plan.rules) {
        const ClassificationOutcome out = decide(scored, rule);
        rec.decisions.push_back({out.chosen, out.chosen_score().edges});
    }
    if (scored.gamma_objective_trace.size() >= 2) {
        rec.residuals = convergence_residual(scored.gamma_objective_trace);
    }
    return rec;
}

std::vector<TrialRecord> run_point(const ExperimentPlan& plan, const ScenarioSpec& spec,
                                   const TrialScorer& scorer) {
    std::vector<TrialRecord> records(static_cast<std::size_t>(plan.trials));
    int workers = plan.jobs > 0 ? plan.jobs : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, plan.trials);
    if (workers == 1) {
        for (int t = 0; t < plan.trials; ++t) {
            records[static_cast<std::size_t>(t)] = run_trial(plan, spec, t, scorer);
        }
        return records;
    }

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (int t = next++; t < plan.trials; t = next++) {
            try {
                records[static_cast<std::size_t>(t)] = run_trial(plan, spec, t, scorer);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = plan.trials;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) {
        pool.emplace_back(work);
    }
    for (auto& th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return records;
}

CellMetrics aggregate(const ExperimentPlan& plan, const ScenarioSpec& spec, std::size_t rule_idx,
                      const std::vector<TrialRecord>& records) {
    const int hyp_count = hypothesis_count(spec.model);
    const int truth = spec.hypothesis;
    const int arity = spec.edge_count();

    CellMetrics m;
    m.cpr_db = spec.cpr_db;
    m.rule = plan.rules[rule_idx];
    m.hypothesis_true = truth;
    m.trials = plan.trials;
    m.confusion.assign(static_cast<std::size_t>(hyp_count),
                       std::vector<long>(static_cast<std::size_t>(hyp_count), 0));

    std::vector<std::pair<std::vector<int>, std::vector<int>>> edge_pairs;
    long correct = 0;
    long rank_hits = 0;
    std::vector<double> psi_sum;
    long psi_count = 0;
    for (const TrialRecord& rec : records) {
        const RuleDecision& d = rec.decisions[rule_idx];
        ++m.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(d.chosen)];
        correct += d.chosen == truth;
        rank_hits += rec.r_used == spec.rank();
        if (arity > 0) {
            if (static_cast<int>(d.edges.size()) == arity) {
                edge_pairs.emplace_back(rec.true_edges, d.edges);
            } else {
                ++m.rms_excluded;
            }
        }
        if (!rec.residuals.empty()) {
            if (psi_sum.empty()) {
                psi_sum.assign(rec.residuals.size(), 0.0);
            }
            for (std::size_t n = 0; n < psi_sum.size(); ++n) {
                psi_sum[n] += rec.residuals[n];
            }
            ++psi_count;
        }
    }
    m.pcc = static_cast<double>(correct) / plan.trials;
    m.ci_halfwidth = wilson_halfwidth(correct, plan.trials);
    m.rms_included = static_cast<int>(edge_pairs.size());
    if (arity > 0) {
        m.rms_edges = edge_pairs.empty()
                          ? std::vector<double>(static_cast<std::size_t>(arity),
                                                std::numeric_limits<double>::quiet_NaN())
                          : rms_edges(edge_pairs);
    }
    m.rank_accuracy = plan.rank_mode == RankMode::kAuto
                          ? static_cast<double>(rank_hits) / plan.trials
                          : std::numeric_limits<double>::quiet_NaN();
    for (double& v : psi_sum) {
        v /= static_cast<double>(psi_count);
    }
    m.delta_psi = std::move(psi_sum);
    return m;
}

}  // namespace

void ExperimentPlan::validate() const {
    if (trials < 1) {
        throw InvalidInput("plan: trials must be at least 1");
    }
    if (cpr_sweep.empty()) {
        throw InvalidInput("plan: CPR sweep is empty");
    }
    if (rules.empty()) {
        throw InvalidInput("plan: no selection rules");
    }
    for (const auto& rule : rules) {
        rule.validate();
    }
    if (n_max < 1) {
        throw InvalidInput("plan: n_max must be positive");
    }
    ScenarioSpec s = base;
    if (edge_mode == EdgeMode::kRandom) {
        // Any admissible edge set will do for the structural checks.
        s.edges.clear();
        for (int i = 0; i < s.edge_count(); ++i) {
            s.edges.push_back(edge_range(s.model, s.hypothesis, i, s.ks, s.rank()).first);
        }
    }
    s.validate();
    if (s.rank() > max_scorable_rank(s.basis.n, s.kp, s.ks)) {
        throw InvalidInput("plan: clutter rank too large for the window geometry");
    }
    if (rank_upper && (*rank_upper < 1 || *rank_upper >= s.basis.n)) {
        throw InvalidInput("plan: rank upper bound must be in [1, N-1]");
    }
}

MetricReport run_experiment(const ExperimentPlan& plan, const TrialScorer& scorer) {
    plan.validate();
    MetricReport report;
    report.model = plan.base.model;
    report.hypothesis_true = plan.base.hypothesis;
    for (double cpr : plan.cpr_sweep) {
        ScenarioSpec spec = plan.base;
        spec.cpr_db = cpr;
        const auto records = run_point(plan, spec, scorer);
        for (std::size_t i = 0; i < plan.rules.size(); ++i) {
            report.cells.push_back(aggregate(plan, spec, i, records));
        }
    }
    return report;
}

std::vector<double> rms_edges(
    const std::vector<std::pair<std::vector<int>, std::vector<int>>>& records) {
    if (records.empty()) {
        throw InvalidInput("rms_edges: no records");
    }
    const std::size_t arity = records.front().first.size();
    std::vector<double> sum(arity, 0.0);
    for (const auto& [truth, est] : records) {
        if (truth.size() != arity || est.size() != arity) {
            throw InvalidInput("rms_edges: arity mismatch");
        }
        for (std::size_t i = 0; i < arity; ++i) {
            const double d = static_cast<double>(est[i] - truth[i]);
            sum[i] += d * d;
        }
    }
    for (double& v : sum) {
        v = std::sqrt(v / static_cast<double>(records.size()));
    }
    return sum;
}

std::vector<double> convergence_residual(const std::vector<double>& objective_trace) {
    if (objective_trace.size() < 2) {
        throw InvalidInput("convergence_residual: trace needs at least two entries");
    }
    std::vector<double> out;
    for (std::size_t n = 1; n < objective_trace.size(); ++n) {
        const double cur = objective_trace[n];
        out.push_back(cur == 0.0 ? std::numeric_limits<double>::infinity()
                                 : std::abs((cur - objective_trace[n - 1]) / cur));
    }
    return out;
}

double wilson_halfwidth(long successes, long trials) {
    if (trials < 1 || successes < 0 || successes > trials) {
        throw InvalidInput("wilson_halfwidth: need 0 <= successes <= trials, trials >= 1");
    }
    constexpr double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = successes / n;
    return z / (1.0 + z * z / n) * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
}

std::vector<double> parse_cpr_grid(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw InvalidInput("");
            }
        } catch (const std::exception&) {
            throw InvalidInput("bad CPR grid '" + text + "'");
        }
    }
    if (parts.size() == 1) {
        return parts;
    }
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
        throw InvalidInput("CPR grid must be start:stop:step with step > 0 and stop >= start");
    }
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long i = 0; i <= count; ++i) {
        grid.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    }
    return grid;
}

}  // namespace clutterscope
