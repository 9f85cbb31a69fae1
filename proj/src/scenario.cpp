#include "clutterscope/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace clutterscope {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) {
        throw InvalidInput(msg);
    }
}

EigenSystem noisy_covariance(const CMatrix& clutter, double noise_power) {
    CMatrix c = clutter;
    c.diagonal().array() += noise_power;
    return hermitian_eig(c);
}

}  // namespace

EigenSystem model1_alt_covariance(const EigenSystem& primary, const RVector& gammas, int r,
                                  double noise_power) {
    EigenSystem out;
    out.vectors = primary.vectors;
    out.values = RVector::Constant(primary.values.size(), noise_power);
    for (int i = 0; i < r; ++i) {
        out.values(i) += gammas(i) * std::max(primary.values(i), 0.0);
    }
    return out;
}

double model2_alt_power(const ScenarioSpec& spec, int region) {
    const double p1 = spec.basis.clutter_power() * std::pow(10.0, spec.cpr_db / 10.0);
    if (region == 0) {
        return p1;
    }
    return spec.hypothesis == 3 ? spec.beta * p1 : 1.5 * p1;
}

int hypothesis_count(Model model) { return model == Model::kOne ? 4 : 5; }

std::string hypothesis_name(Model model, int index) {
    return (model == Model::kOne ? "H_I" : "H_II") + std::to_string(index);
}

double ClutterBasis::clutter_power() const {
    return noise_power * std::pow(10.0, cnr_db / 10.0);
}

void ClutterBasis::validate() const {
    require(n >= 2, "basis: N must be at least 2");
    require(!angles_deg.empty() && rank() < n, "basis: need 1 <= |angles| < N");
    require(std::set<double>(angles_deg.begin(), angles_deg.end()).size() == angles_deg.size(),
            "basis: angles must be distinct");
    require(noise_power > 0.0 && std::isfinite(noise_power), "basis: noise power must be positive");
    require(std::isfinite(cnr_db), "basis: CNR must be finite");
}

int edge_arity(Model model, int hypothesis) {
    if (hypothesis < 0 || hypothesis >= hypothesis_count(model)) {
        throw InvalidInput("invalid hypothesis index " + std::to_string(hypothesis));
    }
    switch (hypothesis) {
        case 2:
        case 4:
            return 1;
        case 3:
            return 2;
        default:
            return 0;
    }
}

std::pair<int, int> edge_range(Model model, int hypothesis, int which, int ks, int r) {
    const int arity = edge_arity(model, hypothesis);
    require(which >= 0 && which < arity, "edge_range: edge index out of range");
    if (arity == 1) {
        return {r, ks - r};
    }
    return which == 0 ? std::pair{r, ks / 2} : std::pair{ks / 2 + 1, ks - r};
}

int ScenarioSpec::edge_count() const { return edge_arity(model, hypothesis); }

void ScenarioSpec::validate() const {
    basis.validate();
    const int r = rank();
    require(hypothesis >= 0 && hypothesis < hypothesis_count(model),
            "spec: hypothesis index out of range for model");
    require(kp > r, "spec: K_P must exceed the clutter rank");
    require(ks > r, "spec: K_S must exceed the clutter rank");
    require(ks % 2 == 0, "spec: K_S must be even");
    require(ks / 2 >= r || edge_count() < 2, "spec: K_S too small for two-edge hypotheses");
    require(static_cast<int>(edges.size()) == edge_count(),
            "spec: " + hypothesis_name(model, hypothesis) + " expects " +
                std::to_string(edge_count()) + " edge(s)");
    for (int i = 0; i < edge_count(); ++i) {
        const auto [lo, hi] = edge_range(model, hypothesis, i, ks, r);
        require(edges[static_cast<std::size_t>(i)] >= lo && edges[static_cast<std::size_t>(i)] <= hi,
                "spec: edge " + std::to_string(edges[static_cast<std::size_t>(i)]) +
                    " outside admissible range [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
    }
    require(std::isfinite(cpr_db), "spec: CPR must be finite");
    require(alpha > 0.0 && beta > 0.0, "spec: alpha and beta must be positive");
    if (alt_angles_deg) {
        require(static_cast<int>(alt_angles_deg->size()) == r,
                "spec: alternative angle set must keep the clutter rank");
    }
}

void DataWindow::validate() const {
    require(zp.rows() >= 2 && zp.rows() == zs.rows(), "window: inconsistent channel count");
    require(zp.cols() >= 1 && zs.cols() >= 2, "window: empty snapshot block");
    require(all_finite(zp) && all_finite(zs), "window: non-finite snapshot entries");
}

CMatrix clutter_matrix(const std::vector<double>& angles_deg, int n, double clutter_power) {
    CMatrix m = CMatrix::Zero(n, n);
    for (double theta : angles_deg) {
        const CVector v = steering_vector(theta, n);
        m.noalias() += v * v.adjoint();
    }
    return clutter_power * m;
}

PrimaryClutter build_primary_clutter(const ClutterBasis& basis) {
    basis.validate();
    PrimaryClutter out;
    out.m = clutter_matrix(basis.angles_deg, basis.n, basis.clutter_power());
    out.eig = hermitian_eig(out.m);
    return out;
}

RVector draw_gamma_profile(double delta, int r, RngStream& rng) {
    require(r >= 1, "draw_gamma_profile: r must be at least 1");
    std::vector<double> w(static_cast<std::size_t>(r));
    for (double& x : w) {
        x = rng.uniform01();
    }
    std::sort(w.begin(), w.end(), std::greater<>());
    const double scale = std::pow(10.0, delta);
    RVector out(r);
    for (int i = 0; i < r; ++i) {
        out(i) = scale * w[static_cast<std::size_t>(i)];
    }
    return out;
}

SegmentLayout segment_layout(const ScenarioSpec& spec) {
    spec.validate();
    const int ks = spec.ks;
    switch (spec.hypothesis) {
        case 0:
            return {{1, ks, SegmentTag::kPrimary}};
        case 1:
            return {{1, ks, SegmentTag::kAlt1}};
        case 2: {
            const int k = spec.edges[0];
            if (k > ks / 2) {
                return {{1, k, SegmentTag::kPrimary}, {k + 1, ks, SegmentTag::kAlt1}};
            }
            return {{1, k, SegmentTag::kAlt1}, {k + 1, ks, SegmentTag::kPrimary}};
        }
        case 3: {
            const int k2 = spec.edges[0];
            const int k3 = spec.edges[1];
            return {{1, k2, SegmentTag::kAlt1},
                    {k2 + 1, k3, SegmentTag::kPrimary},
                    {k3 + 1, ks, SegmentTag::kAlt2}};
        }
        default: {
            const int k4 = spec.edges[0];
            return {{1, k4, SegmentTag::kAlt1}, {k4 + 1, ks, SegmentTag::kAlt2}};
        }
    }
}

std::vector<int> draw_random_edges(const ScenarioSpec& spec, RngStream& rng) {
    const int arity = edge_arity(spec.model, spec.hypothesis);
    std::vector<int> edges;
    for (int i = 0; i < arity; ++i) {
        const auto [lo, hi] = edge_range(spec.model, spec.hypothesis, i, spec.ks, spec.rank());
        require(lo <= hi, "draw_random_edges: empty admissible range");
        edges.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(lo),
                                                         static_cast<std::uint64_t>(hi))));
    }
    return edges;
}

DataWindow synthesize_window(const ScenarioSpec& spec, RngStream& rng) {
    const SegmentLayout layout = segment_layout(spec);
    const int n = spec.basis.n;
    const int r = spec.rank();
    const double noise = spec.basis.noise_power;
    const PrimaryClutter primary = build_primary_clutter(spec.basis);

    EigenSystem primary_cov = primary.eig;
    primary_cov.values = primary.eig.values.cwiseMax(0.0).array() + noise;
    for (int i = r; i < n; ++i) {
        primary_cov.values(i) = noise;
    }
    const CMatrix primary_factor = covariance_factor(primary_cov);

    // Alternative-region factors. Index 0 -> ALT1, 1 -> ALT2.
    CMatrix alt_factor[2];
    const bool has_alt2 = spec.hypothesis >= 3;
    const bool has_alt1 = spec.hypothesis >= 1;
    if (spec.model == Model::kOne) {
        const double delta = spec.cpr_db / 10.0;
        if (has_alt1) {
            const RVector g = draw_gamma_profile(delta, r, rng);
            alt_factor[0] = covariance_factor(model1_alt_covariance(primary.eig, g, r, noise));
        }
        if (has_alt2) {
            const RVector g = draw_gamma_profile(spec.alpha * delta, r, rng);
            alt_factor[1] = covariance_factor(model1_alt_covariance(primary.eig, g, r, noise));
        }
    } else {
        const auto& angles = spec.alt_angles_deg ? *spec.alt_angles_deg : spec.basis.angles_deg;
        for (int l = 0; l < (has_alt2 ? 2 : has_alt1 ? 1 : 0); ++l) {
            const CMatrix c = clutter_matrix(angles, n, model2_alt_power(spec, l));
            alt_factor[l] = covariance_factor(noisy_covariance(c, noise));
        }
    }

    DataWindow w;
    w.zp = sample_snapshots(primary_factor, spec.kp, rng);
    w.zs.resize(n, spec.ks);
    for (const Segment& seg : layout) {
        const CMatrix& f = seg.tag == SegmentTag::kPrimary ? primary_factor
                           : seg.tag == SegmentTag::kAlt1  ? alt_factor[0]
                                                           : alt_factor[1];
        const int count = seg.end - seg.start + 1;
        w.zs.middleCols(seg.start - 1, count) = sample_snapshots(f, count, rng);
    }
    w.truth = spec;
    return w;
}

}  // namespace clutterscope
