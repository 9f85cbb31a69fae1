/**
 * @file scenario.hpp
 * @brief Clutter covariance construction, reference-window layouts and data synthesis.
 *
 * Secondary indices run 1..K_S. The cells under test sit conceptually between
 * secondary indices K_S/2 and K_S/2+1, so for one-edge layouts the side that
 * contains the window centre is the one sharing the primary covariance.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clutterscope/numkit.hpp"

namespace clutterscope {

/// Clutter covariance variation model: 1 = shared eigenvectors with per-direction
/// power scalings, 2 = arbitrary covariance per homogeneous region.
enum class Model { kOne = 1, kTwo = 2 };

int hypothesis_count(Model model);
std::string hypothesis_name(Model model, int index);

struct ClutterBasis {
    std::vector<double> angles_deg{-20.0, 0.0, 10.0};
    int n = 9;
    double cnr_db = 30.0;
    double noise_power = 1.0;

    int rank() const { return static_cast<int>(angles_deg.size()); }
    double clutter_power() const;
    void validate() const;
};

struct ScenarioSpec {
    Model model = Model::kOne;
    int hypothesis = 0;
    int kp = 8;
    int ks = 32;
    std::vector<int> edges;  // H_{.,2}: {K1}; H_{.,3}: {K2, K3}; H_{II,4}: {K4}
    double cpr_db = 0.0;
    double alpha = 1.0;  // Model 1, H_{I,3}: Delta_4 = alpha * Delta_3
    double beta = 1.0;   // Model 2, H_{II,3}: sigma^2_{c,4} = beta * sigma^2_{c,3}
    ClutterBasis basis;
    // Model 2 only: angle set used for the non-primary regions (defaults to basis angles).
    std::optional<std::vector<double>> alt_angles_deg;

    int rank() const { return basis.rank(); }
    int edge_count() const;
    void validate() const;
};

/// Number of edges carried by a hypothesis (0, 1 or 2).
int edge_arity(Model model, int hypothesis);

/// Admissible inclusive range for edge `which` of a hypothesis.
std::pair<int, int> edge_range(Model model, int hypothesis, int which, int ks, int r);

enum class SegmentTag { kPrimary, kAlt1, kAlt2 };

struct Segment {
    int start = 1;  // 1-based, inclusive
    int end = 1;    // inclusive
    SegmentTag tag = SegmentTag::kPrimary;
    bool operator==(const Segment&) const = default;
};

using SegmentLayout = std::vector<Segment>;

struct DataWindow {
    CMatrix zp;  // N x K_P
    CMatrix zs;  // N x K_S
    std::optional<ScenarioSpec> truth;

    int n() const { return static_cast<int>(zp.rows()); }
    int kp() const { return static_cast<int>(zp.cols()); }
    int ks() const { return static_cast<int>(zs.cols()); }
    void validate() const;
};

struct PrimaryClutter {
    CMatrix m;
    EigenSystem eig;
};

PrimaryClutter build_primary_clutter(const ClutterBasis& basis);

/// Clutter dyad sum sigma_c^2 * sum v v^H over the given angles.
CMatrix clutter_matrix(const std::vector<double>& angles_deg, int n, double clutter_power);

/// sigma^2 I + U diag(gamma_i lambda_i) U^H sharing the primary eigenvectors (Model 1 ALT).
EigenSystem model1_alt_covariance(const EigenSystem& primary, const RVector& gammas, int r,
                                  double noise_power);

/// Clutter power of alternative region `region` (0 = first, 1 = second) under Model 2.
double model2_alt_power(const ScenarioSpec& spec, int region);

/// Sorted uniforms scaled by 10^delta: gamma_1 >= ... >= gamma_r, each in (0, 10^delta).
RVector draw_gamma_profile(double delta, int r, RngStream& rng);

SegmentLayout segment_layout(const ScenarioSpec& spec);

/// Discrete-uniform edges over the admissible ranges of the spec's hypothesis.
std::vector<int> draw_random_edges(const ScenarioSpec& spec, RngStream& rng);

DataWindow synthesize_window(const ScenarioSpec& spec, RngStream& rng);

}  // namespace clutterscope
