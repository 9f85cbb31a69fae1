/**
 * @file numkit.hpp
 * @brief Complex linear-algebra and sampling kernels shared by every stage.
 */
#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace clutterscope {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Raised for malformed arguments (non-finite data, bad sizes, out-of-range indices).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when the data admit no well-defined estimate (e.g. snapshots that cancel).
class DegenerateGeometry : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Eigenvalues in non-increasing order; columns of `vectors` are the matching eigenvectors.
struct EigenSystem {
    RVector values;
    CMatrix vectors;
};

/**
 * Deterministic random stream keyed by (seed, stream id).
 *
 * Each Monte Carlo trial owns one stream with stream id = trial index, so trial
 * outcomes do not depend on execution order. Not safe to share across threads.
 */
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    double uniform01();          // open interval (0, 1)
    double standard_normal();
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);  // inclusive bounds

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Hermitian eigendecomposition with eigenvalues sorted non-increasing (stable for ties).
EigenSystem hermitian_eig(const CMatrix& a);

/// Eigenvalues only, non-increasing. Cheaper path for the Gram-driven estimators.
RVector hermitian_eigenvalues(const CMatrix& a);

/// Uniform linear array response, entry m = exp(j*pi*m*sin(theta))/sqrt(N).
CVector steering_vector(double theta_deg, int n);

/// Deterministic unitary Q with Q*e1 = d (phase-corrected Householder reflection).
CMatrix unitary_from_first_column(const CVector& d);

/// N x count snapshots with i.i.d. CN(0, F F^H) columns.
CMatrix sample_snapshots(const CMatrix& cov_factor, int count, RngStream& rng);

/// F = U diag(sqrt(values)) for a covariance given by its eigensystem.
CMatrix covariance_factor(const EigenSystem& cov);

/// Z Z^H
CMatrix gram(const CMatrix& z);

bool all_finite(const CMatrix& a);

}  // namespace clutterscope
