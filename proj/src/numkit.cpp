#include "clutterscope/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace clutterscope {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    return std::mt19937_64(seq);
}

std::vector<Eigen::Index> descending_order(const RVector& ascending) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(ascending.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return ascending(a) > ascending(b); });
    return idx;
}

void require_square_finite(const CMatrix& a, const char* what) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw InvalidInput(std::string(what) + ": matrix must be square and non-empty");
    }
    if (!all_finite(a)) {
        throw InvalidInput(std::string(what) + ": non-finite entries");
    }
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::uniform01() {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    double u = 0.0;
    while (u == 0.0) {
        u = dist(engine_);
    }
    return u;
}

double RngStream::standard_normal() { return normal_(engine_); }

std::uint64_t RngStream::uniform_int(std::uint64_t lo, std::uint64_t hi) {
    std::uniform_int_distribution<std::uint64_t> dist(lo, hi);
    return dist(engine_);
}

bool all_finite(const CMatrix& a) {
    return a.real().allFinite() && a.imag().allFinite();
}

EigenSystem hermitian_eig(const CMatrix& a) {
    require_square_finite(a, "hermitian_eig");
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(a, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw InvalidInput("hermitian_eig: solver did not converge");
    }
    const auto order = descending_order(solver.eigenvalues());
    EigenSystem out;
    out.values.resize(a.rows());
    out.vectors.resize(a.rows(), a.cols());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        out.values(k) = solver.eigenvalues()(order[i]);
        out.vectors.col(k) = solver.eigenvectors().col(order[i]);
    }
    return out;
}

RVector hermitian_eigenvalues(const CMatrix& a) {
    require_square_finite(a, "hermitian_eigenvalues");
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw InvalidInput("hermitian_eigenvalues: solver did not converge");
    }
    return solver.eigenvalues().reverse();
}

CVector steering_vector(double theta_deg, int n) {
    if (n < 2) {
        throw InvalidInput("steering_vector: N must be at least 2");
    }
    const double phase = std::numbers::pi * std::sin(theta_deg * std::numbers::pi / 180.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    CVector v(n);
    for (int m = 0; m < n; ++m) {
        v(m) = std::polar(scale, phase * m);
    }
    return v;
}

CMatrix unitary_from_first_column(const CVector& d) {
    const Eigen::Index n = d.size();
    if (n < 1 || !all_finite(d)) {
        throw InvalidInput("unitary_from_first_column: empty or non-finite vector");
    }
    if (std::abs(d.norm() - 1.0) > 1e-10) {
        throw InvalidInput("unitary_from_first_column: vector must have unit norm");
    }
    // Rotate the phase of d(0) onto the real axis, reflect e1 onto the rotated
    // vector, then restore the phase. H = I - 2 w w^H / |w|^2, w = e1 - d~.
    const double mag0 = std::abs(d(0));
    const cplx phase = mag0 > 0.0 ? d(0) / mag0 : cplx(1.0, 0.0);
    CVector rotated = std::conj(phase) * d;
    rotated(0) = cplx(rotated(0).real(), 0.0);

    CVector w = -rotated;
    w(0) += 1.0;
    const double wn2 = w.squaredNorm();
    CMatrix q = CMatrix::Identity(n, n);
    if (wn2 > 1e-30) {
        q.noalias() -= (2.0 / wn2) * (w * w.adjoint());
    }
    q *= phase;
    // The reflection reproduces d up to rounding; pin the first column exactly.
    q.col(0) = d;
    return q;
}

CMatrix sample_snapshots(const CMatrix& cov_factor, int count, RngStream& rng) {
    if (count < 1) {
        throw InvalidInput("sample_snapshots: count must be at least 1");
    }
    const Eigen::Index n = cov_factor.cols();
    CMatrix w(n, count);
    const double s = std::sqrt(0.5);
    for (int k = 0; k < count; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double re = rng.standard_normal();
            const double im = rng.standard_normal();
            w(i, k) = cplx(s * re, s * im);
        }
    }
    return cov_factor * w;
}

CMatrix covariance_factor(const EigenSystem& cov) {
    RVector roots = cov.values.cwiseMax(0.0).cwiseSqrt();
    return cov.vectors * roots.asDiagonal();
}

CMatrix gram(const CMatrix& z) { return z * z.adjoint(); }

}  // namespace clutterscope
