/**
 * @file estimate.hpp
 * @brief Nuisance-parameter estimators used by the compressed log-likelihoods.
 *
 * Model 1 shares one noise floor, one set of clutter eigenvalues (primary data
 * only) and one subspace estimate across hypotheses; only the per-region power
 * profiles gamma are refit. Model 2 uses closed-form MLEs computed from the
 * eigenvalues of the Gram matrix of each homogeneous region.
 */
#pragma once

#include <span>
#include <vector>

#include "clutterscope/numkit.hpp"

namespace clutterscope {

/// Relative floor applied to noise-power estimates (fraction of average snapshot power).
inline constexpr double kNoiseFloorRel = 1e-12;

struct PrimaryEstimates {
    double sigma2 = 1.0;
    RVector lambdas;          // r entries, non-increasing, >= 0
    bool degenerate = false;  // sigma2 hit the floor
};

struct SubspaceEstimate {
    CMatrix u_hat;  // unitary, first column = mu / |mu|
    CVector mu;     // sum of unit-normalized snapshots
};

struct GammaEstimate {
    RVector gammas;                       // non-increasing, >= 0
    RVector taus;                         // gamma_i = sum_{j >= i} tau_j
    int iterations_used = 0;
    std::vector<double> objective_trace;  // initial value, then one entry per sweep
    bool no_clutter = false;              // all lambdas zero; gammas left at 1
};

/// Eigenvalues of one region's Gram matrix with its snapshot count.
struct SegmentSpectrum {
    RVector mu;  // all N eigenvalues, non-increasing
    int count = 0;
};

struct GramBlock {
    CMatrix gram;
    int count = 0;
};

struct Model2SegmentEstimates {
    double sigma2 = 1.0;
    std::vector<RVector> lambda_sets;  // one r-vector per region
    bool degenerate = false;
};

/// Noise floor and clutter eigenvalues from eigenvalues `mu` of a Gram built from `count` snapshots.
PrimaryEstimates estimates_from_spectrum(const RVector& mu, int count, int r);

PrimaryEstimates primary_noise_and_eigs(const CMatrix& zp, int r);

SubspaceEstimate subspace_estimate(const CMatrix& zp, const CMatrix& zs);

/// Objective maximized by the cyclic fit:
/// sum_i [ -K log(s2 + g_i l_i) - s_i / (s2 + g_i l_i) ], i < r.
double gamma_objective(const RVector& gammas, const RVector& s_diag, const PrimaryEstimates& est,
                       int k_eff);

/// Exact 1-D maximizer of the objective over tau[coord] >= 0 with the other taus fixed.
double coordinate_update(int coord, const RVector& taus, const RVector& s_diag,
                         const PrimaryEstimates& est, int k_eff);

/// Cyclic coordinate ascent over the cumulative parameterization, exactly n_max sweeps.
GammaEstimate cyclic_gamma_fit(const RVector& s_diag, const PrimaryEstimates& est, int k_eff,
                               int n_max);

/// Shared-noise MLEs across homogeneous regions given their Gram spectra.
Model2SegmentEstimates model2_mles_from_spectra(std::span<const SegmentSpectrum> segments, int r);

Model2SegmentEstimates model2_segment_mles(std::span<const GramBlock> grams, int r);

/// Compressed log-likelihood of a Model 2 partition, including the -N K log(pi) term.
double model2_loglik(std::span<const SegmentSpectrum> segments, const Model2SegmentEstimates& est,
                     int r);

}  // namespace clutterscope
