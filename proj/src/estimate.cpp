#include "clutterscope/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace clutterscope {

namespace {

void check_rank(int r, Eigen::Index n) {
    if (r < 1 || r >= n) {
        throw InvalidInput("rank must satisfy 1 <= r < N");
    }
}

double floored_noise(double trailing_sum, double denom, double total_power, double avg_count,
                     Eigen::Index n, bool& degenerate) {
    const double floor = kNoiseFloorRel * total_power / (avg_count * static_cast<double>(n));
    double s2 = trailing_sum / denom;
    degenerate = !(s2 > floor);
    if (degenerate) {
        s2 = floor > 0.0 ? floor : std::numeric_limits<double>::min();
    }
    return s2;
}

// Coordinate objective restricted to the terms that depend on tau[coord].
struct CoordinateProblem {
    std::vector<double> offset;  // A_i: cumulative tau excluding coord
    std::vector<double> lambda;
    std::vector<double> s;
    double sigma2;
    double k;

    double value(double t) const {
        double f = 0.0;
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            const double c = sigma2 + (offset[i] + t) * lambda[i];
            f -= k * std::log(c) + s[i] / c;
        }
        return f;
    }
};

double golden_max(const CoordinateProblem& p, double a, double b, double tol) {
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = p.value(x1);
    double f2 = p.value(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = p.value(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = p.value(x1);
        }
    }
    return f1 > f2 ? x1 : x2;
}

}  // namespace

PrimaryEstimates estimates_from_spectrum(const RVector& mu, int count, int r) {
    check_rank(r, mu.size());
    if (count < 1) {
        throw InvalidInput("estimates_from_spectrum: count must be positive");
    }
    const Eigen::Index n = mu.size();
    const RVector m = mu.cwiseMax(0.0);
    PrimaryEstimates est;
    est.sigma2 = floored_noise(m.tail(n - r).sum(), static_cast<double>(count) * (n - r), m.sum(),
                               count, n, est.degenerate);
    est.lambdas.resize(r);
    for (int i = 0; i < r; ++i) {
        est.lambdas(i) = std::max(m(i) / count - est.sigma2, 0.0);
    }
    return est;
}

PrimaryEstimates primary_noise_and_eigs(const CMatrix& zp, int r) {
    check_rank(r, zp.rows());
    if (zp.cols() <= r) {
        throw InvalidInput("primary_noise_and_eigs: need K_P > r");
    }
    return estimates_from_spectrum(hermitian_eigenvalues(gram(zp)), static_cast<int>(zp.cols()), r);
}

SubspaceEstimate subspace_estimate(const CMatrix& zp, const CMatrix& zs) {
    if (zp.rows() != zs.rows()) {
        throw InvalidInput("subspace_estimate: channel mismatch");
    }
    CVector mu = CVector::Zero(zp.rows());
    auto accumulate = [&mu](const CMatrix& z) {
        for (Eigen::Index k = 0; k < z.cols(); ++k) {
            const double nrm = z.col(k).norm();
            if (!(nrm > 0.0) || !std::isfinite(nrm)) {
                throw InvalidInput("subspace_estimate: zero-norm or non-finite snapshot");
            }
            mu += z.col(k) / nrm;
        }
    };
    accumulate(zp);
    accumulate(zs);
    const double nrm = mu.norm();
    if (nrm < 1e-12) {
        throw DegenerateGeometry("subspace_estimate: normalized snapshots cancel out");
    }
    SubspaceEstimate out;
    out.u_hat = unitary_from_first_column(mu / nrm);
    out.mu = std::move(mu);
    return out;
}

double gamma_objective(const RVector& gammas, const RVector& s_diag, const PrimaryEstimates& est,
                       int k_eff) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < est.lambdas.size(); ++i) {
        const double c = est.sigma2 + gammas(i) * est.lambdas(i);
        f -= k_eff * std::log(c) + s_diag(i) / c;
    }
    return f;
}

double coordinate_update(int coord, const RVector& taus, const RVector& s_diag,
                         const PrimaryEstimates& est, int k_eff) {
    const auto r = static_cast<int>(est.lambdas.size());
    if (coord < 0 || coord >= r || taus.size() != r || s_diag.size() < r) {
        throw InvalidInput("coordinate_update: index or size mismatch");
    }
    CoordinateProblem p;
    p.sigma2 = est.sigma2;
    p.k = static_cast<double>(k_eff);
    // tau[coord] enters gamma_i for every i <= coord; lambda_i = 0 terms are constant.
    for (int i = 0; i <= coord; ++i) {
        if (est.lambdas(i) <= 0.0) {
            continue;
        }
        p.offset.push_back(taus.segment(i, r - i).sum() - taus(coord));
        p.lambda.push_back(est.lambdas(i));
        p.s.push_back(s_diag(i));
    }
    if (p.lambda.empty()) {
        return taus(coord);
    }

    // Each term peaks where sigma2 + (A_i + t) lambda_i = s_i / K, so the maximizer
    // over t >= 0 lies between the smallest and largest per-term peaks.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.lambda.size(); ++i) {
        const double peak = (p.s[i] / p.k - p.sigma2 - p.offset[i] * p.lambda[i]) / p.lambda[i];
        lo = std::min(lo, peak);
        hi = std::max(hi, peak);
    }
    if (hi <= 0.0) {
        return 0.0;
    }
    lo = std::max(lo, 0.0);
    if (hi - lo <= 0.0) {
        return lo;
    }

    constexpr int kScan = 32;
    const double step = (hi - lo) / kScan;
    int best = 0;
    double best_f = p.value(lo);
    for (int j = 1; j <= kScan; ++j) {
        const double f = p.value(lo + j * step);
        if (f > best_f) {
            best_f = f;
            best = j;
        }
    }
    const double a = lo + std::max(best - 1, 0) * step;
    const double b = lo + std::min(best + 1, kScan) * step;
    const double tol = 1e-14 * std::max(1.0, hi);
    double t = golden_max(p, a, b, tol);
    double ft = p.value(t);
    if (best_f > ft) {
        t = lo + best * step;
        ft = best_f;
    }
    // Never leave the current point for a worse one.
    const double current = std::max(taus(coord), 0.0);
    if (p.value(current) >= ft) {
        return current;
    }
    return t;
}

GammaEstimate cyclic_gamma_fit(const RVector& s_diag, const PrimaryEstimates& est, int k_eff,
                               int n_max) {
    const auto r = static_cast<int>(est.lambdas.size());
    if (k_eff < 1 || n_max < 0 || s_diag.size() < r || (s_diag.head(r).array() < 0.0).any()) {
        throw InvalidInput("cyclic_gamma_fit: invalid arguments");
    }
    GammaEstimate out;
    out.taus = RVector::Zero(r);
    out.taus(r - 1) = 1.0;
    auto cumulative = [r](const RVector& taus) {
        RVector g(r);
        double acc = 0.0;
        for (int i = r - 1; i >= 0; --i) {
            acc += taus(i);
            g(i) = acc;
        }
        return g;
    };
    out.gammas = cumulative(out.taus);
    out.objective_trace.push_back(gamma_objective(out.gammas, s_diag, est, k_eff));
    out.no_clutter = (est.lambdas.array() <= 0.0).all();

    for (int sweep = 0; sweep < n_max; ++sweep) {
        if (!out.no_clutter) {
            for (int h = 0; h < r; ++h) {
                out.taus(h) = coordinate_update(h, out.taus, s_diag, est, k_eff);
            }
            out.gammas = cumulative(out.taus);
        }
        out.objective_trace.push_back(gamma_objective(out.gammas, s_diag, est, k_eff));
        ++out.iterations_used;
    }
    return out;
}

Model2SegmentEstimates model2_mles_from_spectra(std::span<const SegmentSpectrum> segments, int r) {
    if (segments.empty()) {
        throw InvalidInput("model2_mles: no segments");
    }
    const Eigen::Index n = segments.front().mu.size();
    check_rank(r, n);
    double trailing = 0.0;
    double total_power = 0.0;
    double total_count = 0.0;
    for (const auto& seg : segments) {
        if (seg.count < 1 || seg.mu.size() != n) {
            throw InvalidInput("model2_mles: empty segment or size mismatch");
        }
        const RVector m = seg.mu.cwiseMax(0.0);
        trailing += m.tail(n - r).sum();
        total_power += m.sum();
        total_count += seg.count;
    }
    Model2SegmentEstimates est;
    est.sigma2 = floored_noise(trailing, total_count * static_cast<double>(n - r), total_power,
                               total_count, n, est.degenerate);
    for (const auto& seg : segments) {
        RVector l(r);
        for (int i = 0; i < r; ++i) {
            l(i) = std::max(std::max(seg.mu(i), 0.0) / seg.count - est.sigma2, 0.0);
        }
        est.lambda_sets.push_back(std::move(l));
    }
    return est;
}

Model2SegmentEstimates model2_segment_mles(std::span<const GramBlock> grams, int r) {
    std::vector<SegmentSpectrum> spectra;
    spectra.reserve(grams.size());
    for (const auto& g : grams) {
        spectra.push_back({hermitian_eigenvalues(g.gram), g.count});
    }
    return model2_mles_from_spectra(spectra, r);
}

double model2_loglik(std::span<const SegmentSpectrum> segments, const Model2SegmentEstimates& est,
                     int r) {
    const Eigen::Index n = segments.front().mu.size();
    double k_total = 0.0;
    double h = 0.0;
    double trailing = 0.0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto& seg = segments[s];
        const RVector& l = est.lambda_sets[s];
        k_total += seg.count;
        for (int i = 0; i < r; ++i) {
            const double c = est.sigma2 + l(i);
            h -= seg.count * std::log(c) + std::max(seg.mu(i), 0.0) / c;
        }
        trailing += seg.mu.tail(n - r).cwiseMax(0.0).sum();
    }
    h -= k_total * static_cast<double>(n - r) * std::log(est.sigma2);
    h -= trailing / est.sigma2;
    h -= static_cast<double>(n) * k_total * std::log(std::numbers::pi);
    return h;
}

}  // namespace clutterscope
