#include "clutterscope/io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace clutterscope {

using nlohmann::json;

namespace {

json matrix_to_json(const CMatrix& m) {
    json cols = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
        json col = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            col.push_back({m(i, k).real(), m(i, k).imag()});
        }
        cols.push_back(std::move(col));
    }
    return cols;
}

CMatrix matrix_from_json(const json& j, int n, int k, const char* name) {
    if (!j.is_array() || static_cast<int>(j.size()) != k) {
        throw InvalidInput(std::string("window: '") + name + "' must list " + std::to_string(k) +
                           " snapshots");
    }
    CMatrix m(n, k);
    for (int c = 0; c < k; ++c) {
        const json& col = j[static_cast<std::size_t>(c)];
        if (!col.is_array() || static_cast<int>(col.size()) != n) {
            throw InvalidInput(std::string("window: snapshot in '") + name + "' has wrong length");
        }
        for (int i = 0; i < n; ++i) {
            const json& z = col[static_cast<std::size_t>(i)];
            if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number()) {
                throw InvalidInput("window: entries must be [re, im] number pairs");
            }
            m(i, c) = {z[0].get<double>(), z[1].get<double>()};
        }
    }
    return m;
}

int require_int(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        throw InvalidInput(std::string("missing integer field '") + key + "'");
    }
    return j[key].get<int>();
}

}  // namespace

std::string format_real(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json spec_to_json(const ScenarioSpec& spec) {
    json j{{"model", static_cast<int>(spec.model)},
           {"hypothesis", spec.hypothesis},
           {"kp", spec.kp},
           {"ks", spec.ks},
           {"edges", spec.edges},
           {"cpr_db", spec.cpr_db},
           {"alpha", spec.alpha},
           {"beta", spec.beta},
           {"angles_deg", spec.basis.angles_deg},
           {"n", spec.basis.n},
           {"cnr_db", spec.basis.cnr_db},
           {"noise_power", spec.basis.noise_power}};
    j["alt_angles_deg"] = spec.alt_angles_deg ? json(*spec.alt_angles_deg) : json(nullptr);
    return j;
}

ScenarioSpec spec_from_json(const json& j) {
    if (!j.is_object()) {
        throw InvalidInput("truth must be an object");
    }
    try {
        ScenarioSpec s;
        const int model = j.at("model").get<int>();
        if (model != 1 && model != 2) {
            throw InvalidInput("truth: model must be 1 or 2");
        }
        s.model = static_cast<Model>(model);
        s.hypothesis = j.at("hypothesis").get<int>();
        s.kp = j.at("kp").get<int>();
        s.ks = j.at("ks").get<int>();
        s.edges = j.at("edges").get<std::vector<int>>();
        s.cpr_db = j.at("cpr_db").get<double>();
        s.alpha = j.value("alpha", 1.0);
        s.beta = j.value("beta", 1.0);
        s.basis.angles_deg = j.at("angles_deg").get<std::vector<double>>();
        s.basis.n = j.at("n").get<int>();
        s.basis.cnr_db = j.at("cnr_db").get<double>();
        s.basis.noise_power = j.value("noise_power", 1.0);
        if (j.contains("alt_angles_deg") && !j["alt_angles_deg"].is_null()) {
            s.alt_angles_deg = j["alt_angles_deg"].get<std::vector<double>>();
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("truth: ") + e.what());
    }
}

json window_to_json(const DataWindow& window) {
    json j{{"n", window.n()}, {"kp", window.kp()}, {"ks", window.ks()}};
    j["zp"] = matrix_to_json(window.zp);
    j["zs"] = matrix_to_json(window.zs);
    j["truth"] = window.truth ? spec_to_json(*window.truth) : json(nullptr);
    return j;
}

DataWindow window_from_json(const json& j) {
    if (!j.is_object()) {
        throw InvalidInput("window: top level must be an object");
    }
    const int n = require_int(j, "n");
    const int kp = require_int(j, "kp");
    const int ks = require_int(j, "ks");
    if (n < 2 || kp < 1 || ks < 2) {
        throw InvalidInput("window: need n >= 2, kp >= 1, ks >= 2");
    }
    if (!j.contains("zp") || !j.contains("zs")) {
        throw InvalidInput("window: missing 'zp' or 'zs'");
    }
    DataWindow w;
    w.zp = matrix_from_json(j["zp"], n, kp, "zp");
    w.zs = matrix_from_json(j["zs"], n, ks, "zs");
    if (j.contains("truth") && !j["truth"].is_null()) {
        w.truth = spec_from_json(j["truth"]);
    }
    w.validate();
    return w;
}

json outcome_to_json(const ClassificationOutcome& outcome) {
    const auto& best = outcome.chosen_score();
    json scores = json::array();
    for (const auto& s : outcome.scores) {
        scores.push_back({{"hypothesis", hypothesis_name(s.model, s.hypothesis)},
                          {"loglik", s.loglik},
                          {"param_count", s.param_count},
                          {"kappa", s.kappa},
                          {"penalized", s.penalized},
                          {"edges", s.edges}});
    }
    return {{"chosen", hypothesis_name(outcome.model, outcome.chosen)},
            {"edges", best.edges},
            {"r", outcome.r_used},
            {"r_estimated", outcome.r_estimated},
            {"scores", std::move(scores)}};
}

json report_to_json(const MetricReport& report) {
    json cells = json::array();
    for (const auto& c : report.cells) {
        cells.push_back({{"cpr_db", c.cpr_db},
                         {"rule", c.rule.label()},
                         {"hypothesis_true", hypothesis_name(report.model, c.hypothesis_true)},
                         {"trials", c.trials},
                         {"pcc", c.pcc},
                         {"ci_halfwidth", c.ci_halfwidth},
                         {"confusion", c.confusion},
                         {"rms_edges", c.rms_edges},
                         {"rms_included", c.rms_included},
                         {"rms_excluded", c.rms_excluded},
                         {"rank_accuracy", c.rank_accuracy},
                         {"delta_psi", c.delta_psi}});
    }
    return {{"model", static_cast<int>(report.model)},
            {"hypothesis_true", hypothesis_name(report.model, report.hypothesis_true)},
            {"cells", std::move(cells)}};
}

void write_report_csv(std::ostream& os, const MetricReport& report,
                      const std::vector<std::string>& header_comments) {
    for (const auto& line : header_comments) {
        os << "# " << line << '\n';
    }
    os << "cpr_db,rule,hypothesis_true,pcc,ci_halfwidth,rms_k1,rms_k2,rms_k3,rank_acc,trials\n";
    constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& c : report.cells) {
        // One-edge hypotheses report in k1; the two-edge hypothesis in k2 and k3.
        double rms[3] = {kNan, kNan, kNan};
        if (c.rms_edges.size() == 1) {
            rms[0] = c.rms_edges[0];
        } else if (c.rms_edges.size() == 2) {
            rms[1] = c.rms_edges[0];
            rms[2] = c.rms_edges[1];
        }
        os << format_real(c.cpr_db) << ',' << c.rule.label() << ','
           << hypothesis_name(report.model, c.hypothesis_true) << ',' << format_real(c.pcc) << ','
           << format_real(c.ci_halfwidth) << ',' << format_real(rms[0]) << ','
           << format_real(rms[1]) << ',' << format_real(rms[2]) << ','
           << format_real(c.rank_accuracy) << ',' << c.trials << '\n';
    }
}

}  // namespace clutterscope
