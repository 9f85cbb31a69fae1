#include "clutterscope/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "clutterscope/io.hpp"

namespace clutterscope {

namespace {

struct Flags {
    int model = 1;
    int hyp = 0;
    int n = 9;
    int kp = 8;
    int ks = 32;
    double cnr = 30.0;
    std::vector<double> angles{-20.0, 0.0, 10.0};
    std::string cpr;
    std::vector<int> edges;
    std::string edge_mode = "fixed";
    double alpha = 1.0;
    double beta = 1.0;
    std::string rules;
    std::optional<double> rho;
    int trials = 1000;
    std::optional<std::uint64_t> seed;
    int nmax = 6;
    std::string rank = "known";
    int jobs = 1;
    bool json = false;
    std::string out;
    std::string input;
};

std::uint64_t resolve_seed(const Flags& f) {
    if (f.seed) {
        return *f.seed;
    }
    if (const char* env = std::getenv("CLUTTERSCOPE_SEED")) {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(env, &used);
            if (used == std::string(env).size()) {
                return v;
            }
        } catch (const std::exception&) {
        }
        throw InvalidInput("CLUTTERSCOPE_SEED is not an unsigned integer");
    }
    return 0;
}

std::vector<MosRule> resolve_rules(const Flags& f, const std::string& fallback) {
    const std::string text = f.rules.empty() ? fallback : f.rules;
    std::vector<MosRule> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(parse_rule(item, f.rho));
        }
    }
    if (out.empty()) {
        throw InvalidInput("no selection rule given");
    }
    return out;
}

ScenarioSpec resolve_spec(const Flags& f, bool need_edges) {
    if (f.model != 1 && f.model != 2) {
        throw InvalidInput("--model must be 1 or 2");
    }
    ScenarioSpec s;
    s.model = static_cast<Model>(f.model);
    s.hypothesis = f.hyp;
    s.kp = f.kp;
    s.ks = f.ks;
    s.alpha = f.alpha;
    s.beta = f.beta;
    s.basis.n = f.n;
    s.basis.cnr_db = f.cnr;
    s.basis.angles_deg = f.angles;
    s.edges = f.edges;
    if (need_edges) {
        s.validate();
    }
    return s;
}

std::vector<std::string> echo(const Flags& f, const std::string& command, std::uint64_t seed) {
    auto join = [](const auto& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += (i ? "," : "") + format_real(static_cast<double>(v[i]));
        }
        return s;
    };
    std::vector<std::string> lines{
        "command=" + command,
        "model=" + std::to_string(f.model),
        "hyp=" + std::to_string(f.hyp),
        "n=" + std::to_string(f.n),
        "kp=" + std::to_string(f.kp),
        "ks=" + std::to_string(f.ks),
        "cnr=" + format_real(f.cnr),
        "angles=" + join(f.angles),
        "cpr=" + f.cpr,
        "edges=" + join(f.edges),
        "edge_mode=" + f.edge_mode,
        "alpha=" + format_real(f.alpha),
        "beta=" + format_real(f.beta),
        "rule=" + f.rules,
        "rho=" + (f.rho ? format_real(*f.rho) : std::string()),
        "trials=" + std::to_string(f.trials),
        "seed=" + std::to_string(seed),
        "nmax=" + std::to_string(f.nmax),
        "rank=" + f.rank,
    };
    if (!f.input.empty()) {
        lines.push_back("input=" + f.input);
    }
    return lines;
}

nlohmann::json echo_json(const std::vector<std::string>& lines) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& line : lines) {
        const auto eq = line.find('=');
        j[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return j;
}

ExperimentPlan resolve_plan(const Flags& f, const std::string& default_cpr,
                            const std::string& default_rules) {
    ExperimentPlan plan;
    if (f.edge_mode != "fixed" && f.edge_mode != "random") {
        throw InvalidInput("--edge-mode must be fixed or random");
    }
    plan.edge_mode = f.edge_mode == "random" ? EdgeMode::kRandom : EdgeMode::kFixed;
    plan.base = resolve_spec(f, false);
    plan.cpr_sweep = parse_cpr_grid(f.cpr.empty() ? default_cpr : f.cpr);
    plan.rules = resolve_rules(f, default_rules);
    plan.trials = f.trials;
    plan.master_seed = resolve_seed(f);
    plan.n_max = f.nmax;
    plan.jobs = f.jobs;
    if (f.rank == "auto") {
        plan.rank_mode = RankMode::kAuto;
    } else if (f.rank == "known") {
        plan.rank_mode = RankMode::kKnown;
    } else {
        throw InvalidInput("--rank must be known or auto for experiments");
    }
    plan.validate();
    return plan;
}

void add_scenario_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--model", f.model, "Covariance model (1 or 2)")->check(CLI::IsMember({1, 2}));
    cmd->add_option("--hyp", f.hyp, "True hypothesis index");
    cmd->add_option("--n", f.n, "Number of channels N");
    cmd->add_option("--kp", f.kp, "Primary snapshots K_P");
    cmd->add_option("--ks", f.ks, "Secondary snapshots K_S");
    cmd->add_option("--cnr", f.cnr, "Clutter-to-noise ratio (dB)");
    cmd->add_option("--angles", f.angles, "Clutter angles (deg)")->delimiter(',');
    cmd->add_option("--edges", f.edges, "Clutter edge indices")->delimiter(',');
    cmd->add_option("--alpha", f.alpha, "Model 1 two-edge power exponent scaling");
    cmd->add_option("--beta", f.beta, "Model 2 two-edge power scaling");
    cmd->add_option("--seed", f.seed, "Master seed (fallback: CLUTTERSCOPE_SEED)");
}

void add_experiment_flags(CLI::App* cmd, Flags& f) {
    add_scenario_flags(cmd, f);
    cmd->add_option("--cpr", f.cpr, "CPR grid start:stop:step or single value (dB)");
    cmd->add_option("--edge-mode", f.edge_mode, "fixed or random");
    cmd->add_option("--rule", f.rules, "Comma-separated rules: aic, bic, gic, gicN");
    cmd->add_option("--rho", f.rho, "GIC rho used by a bare 'gic'");
    cmd->add_option("--trials", f.trials, "Trials per CPR point");
    cmd->add_option("--nmax", f.nmax, "Cyclic fit sweeps");
    cmd->add_option("--rank", f.rank, "known or auto");
    cmd->add_option("--jobs", f.jobs, "Worker threads (0 = all cores)");
    cmd->add_flag("--json", f.json, "Emit JSON instead of CSV");
    cmd->add_option("-o,--out", f.out, "Output file (default stdout)");
}

std::string cmd_gen(const Flags& f) {
    const ScenarioSpec base = resolve_spec(f, false);
    ScenarioSpec s = base;
    s.cpr_db = f.cpr.empty() ? 0.0 : parse_cpr_grid(f.cpr).front();
    const std::uint64_t seed = resolve_seed(f);
    RngStream rng(seed, 0);
    if (f.edge_mode == "random") {
        s.edges = draw_random_edges(s, rng);
    }
    s.validate();
    nlohmann::json j = window_to_json(synthesize_window(s, rng));
    j["flags"] = echo_json(echo(f, "gen", seed));
    return j.dump() + "\n";
}

std::string cmd_classify(const Flags& f) {
    std::ifstream in(f.input);
    if (!in) {
        throw InvalidInput("cannot open '" + f.input + "'");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed JSON: ") + e.what());
    }
    const DataWindow w = window_from_json(j);
    if (f.model != 1 && f.model != 2) {
        throw InvalidInput("--model must be 1 or 2");
    }
    const auto rules = resolve_rules(f, "aic");
    if (rules.size() != 1) {
        throw InvalidInput("classify takes exactly one rule");
    }
    ClassifyOptions opts;
    opts.n_max = f.nmax;
    if (f.rank == "known") {
        if (w.truth) {
            opts.rank = w.truth->rank();
        }
    } else if (f.rank != "auto") {
        try {
            std::size_t used = 0;
            opts.rank = std::stoi(f.rank, &used);
            if (used != f.rank.size()) {
                throw InvalidInput("");
            }
        } catch (const std::exception&) {
            throw InvalidInput("--rank must be an integer or 'auto'");
        }
    }
    const ClassificationOutcome out = classify(w, static_cast<Model>(f.model), rules.front(), opts);
    nlohmann::json result = outcome_to_json(out);
    result["rule"] = rules.front().label();
    result["flags"] = echo_json(echo(f, "classify", 0));
    return result.dump(2) + "\n";
}

std::string report_text(const Flags& f, const std::string& command, const MetricReport& report,
                        std::uint64_t seed) {
    const auto header = echo(f, command, seed);
    if (f.json) {
        nlohmann::json j = report_to_json(report);
        j["flags"] = echo_json(header);
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    write_report_csv(os, report, header);
    return os.str();
}

std::string cmd_sweep(const Flags& f) {
    const ExperimentPlan plan = resolve_plan(f, "0:25:1", "aic,gic2,gic4,bic");
    return report_text(f, "sweep", run_experiment(plan), plan.master_seed);
}

std::string cmd_rank(Flags f) {
    if (f.rank == "known") {
        f.rank = "auto";
    }
    const ExperimentPlan plan = resolve_plan(f, "0", "bic");
    return report_text(f, "rank", run_experiment(plan), plan.master_seed);
}

std::string cmd_convergence(Flags f) {
    if (f.model != 1) {
        throw InvalidInput("convergence studies apply to model 1 only");
    }
    if (f.hyp == 0) {
        f.hyp = 1;
    }
    ExperimentPlan plan = resolve_plan(f, "10", "aic");
    plan.rules.resize(1);
    const MetricReport report = run_experiment(plan);
    const auto header = echo(f, "convergence", plan.master_seed);
    if (f.json) {
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& c : report.cells) {
            cells.push_back({{"cpr_db", c.cpr_db}, {"delta_psi", c.delta_psi}});
        }
        nlohmann::json j{{"cells", cells}, {"flags", echo_json(header)}};
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    for (const auto& line : header) {
        os << "# " << line << '\n';
    }
    os << "cpr_db,n,delta_psi,trials\n";
    for (const auto& c : report.cells) {
        for (std::size_t n = 0; n < c.delta_psi.size(); ++n) {
            os << format_real(c.cpr_db) << ',' << n + 1 << ',' << format_real(c.delta_psi[n]) << ','
               << c.trials << '\n';
        }
    }
    return os.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Clutter-edge classification for reference-window data"};
    app.require_subcommand(1);
    Flags f;

    auto* gen = app.add_subcommand("gen", "Synthesize one data window as JSON");
    add_scenario_flags(gen, f);
    gen->add_option("--cpr", f.cpr, "Clutter power ratio (dB)");
    gen->add_option("--edge-mode", f.edge_mode, "fixed or random");
    gen->add_option("-o,--out", f.out, "Output file (default stdout)");

    auto* cls = app.add_subcommand("classify", "Classify a stored window");
    cls->add_option("input", f.input, "DataWindow JSON file")->required();
    cls->add_option("--model", f.model, "Covariance model (1 or 2)");
    cls->add_option("--rule", f.rules, "aic, bic, gic or gicN");
    cls->add_option("--rho", f.rho, "GIC rho used by a bare 'gic'");
    cls->add_option("--nmax", f.nmax, "Cyclic fit sweeps");
    cls->add_option("--rank", f.rank, "Clutter rank, 'known' (from stored truth) or 'auto'");
    cls->add_option("-o,--out", f.out, "Output file (default stdout)");

    auto* sweep = app.add_subcommand("sweep", "Pcc/RMS sweep over a CPR grid");
    add_experiment_flags(sweep, f);
    auto* rank = app.add_subcommand("rank", "Rank-estimation accuracy experiment");
    add_experiment_flags(rank, f);
    auto* conv = app.add_subcommand("convergence", "Cyclic-fit residual study");
    add_experiment_flags(conv, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return kExitBadInput;
    }

    std::string text;
    try {
        if (gen->parsed()) {
            text = cmd_gen(f);
        } else if (cls->parsed()) {
            text = cmd_classify(f);
        } else if (sweep->parsed()) {
            text = cmd_sweep(f);
        } else if (rank->parsed()) {
            text = cmd_rank(f);
        } else {
            text = cmd_convergence(f);
        }
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }

    if (f.out.empty()) {
        out << text << std::flush;
        return out ? kExitOk : kExitRuntime;
    }
    std::ofstream file(f.out, std::ios::binary);
    file << text;
    file.close();
    if (!file) {
        err << "error: failed writing '" << f.out << "'\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace clutterscope
