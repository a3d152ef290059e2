#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fdvi/error.hpp"

namespace fdvi {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Parameter layout shared by natural parameters, sufficient statistics, the
/// Jacobian columns and the least-squares system:
///
///   [0, d)             squares          theta_j^2
///   [d, d + d(d-1)/2)  band products    theta_j * theta_{j+k}, k = 1..d-1, j = 0..d-k-1
///   [m - d, m)         linear           theta_j
///
/// with m = d(d+3)/2.
namespace layout {

constexpr Index param_dim(Index d) noexcept { return d * (d + 3) / 2; }

/// Inverse of param_dim; throws std::invalid_argument if m is not of that form.
Index state_dim(Index m);

/// Offset of the band-k block (k >= 1).
constexpr Index band_offset(Index d, Index k) noexcept {
    // d + sum_{k'=1}^{k-1} (d - k')
    return d + (k - 1) * d - (k - 1) * k / 2;
}

constexpr Index linear_offset(Index d) noexcept { return param_dim(d) - d; }

/// Coordinates (row, col) with row <= col of the product a parameter slot
/// multiplies, or (j, -1) for a linear slot.
struct Slot {
    Index first;
    Index second;  // -1 for linear slots
};

std::vector<Slot> slots(Index d);

}  // namespace layout

/// One nonzero entry of a Jacobian column: D(theta)(row, a) = coef * theta_var,
/// or coef when var == -1.
struct JacobianTerm {
    Index row;
    Index var;
    double coef;
};

/// Sparse symbolic form of D(theta): column a is the list of its terms.
/// Every entry of D is of degree <= 1 in theta, which is what makes
/// E[D^T D] a closed-form function of the first two moments.
std::vector<std::vector<JacobianTerm>> jacobian_terms(Index d);

/// Mean/covariance form of a Gaussian. The covariance is symmetrized from its
/// upper triangle and must admit a Cholesky factorization.
class MomentParam {
public:
    MomentParam(VectorXd mean, const MatrixXd& cov);

    Index dim() const noexcept { return mean_.size(); }
    const VectorXd& mean() const noexcept { return mean_; }
    const MatrixXd& cov() const noexcept { return cov_; }
    /// Lower Cholesky factor of the covariance.
    const MatrixXd& chol() const noexcept { return chol_; }
    /// E[theta theta^T] = Sigma + mu mu^T.
    MatrixXd second_moment() const { return cov_ + mean_ * mean_.transpose(); }

private:
    VectorXd mean_;
    MatrixXd cov_;
    MatrixXd chol_;
};

/// Natural parameter vector psi of length m = d(d+3)/2 (see `layout`).
/// Validity (positive definite implied precision) is checked when converting
/// to moments, not on construction, so the solver can hold candidate iterates.
class NaturalParam {
public:
    NaturalParam() = default;
    explicit NaturalParam(VectorXd psi);

    Index dim() const noexcept { return d_; }
    Index size() const noexcept { return psi_.size(); }
    const VectorXd& vec() const noexcept { return psi_; }
    double operator[](Index i) const { return psi_(i); }

    /// Implied precision Omega (symmetric, not necessarily PD).
    MatrixXd precision() const;
    /// The trailing block Omega * mu.
    VectorXd shift() const { return psi_.tail(d_); }

private:
    VectorXd psi_;
    Index d_ = 0;
};

/// Throws PdViolation naming the first non-positive leading minor.
MatrixXd checked_cholesky(const MatrixXd& a, const char* what);

NaturalParam moment_to_natural(const MomentParam& p);
MomentParam natural_to_moment(const NaturalParam& psi);

VectorXd sufficient_stats(const VectorXd& theta);

/// d x m matrix D(theta) with D(r, j) = d s_j / d theta_r.
MatrixXd stat_jacobian(const VectorXd& theta);

/// Score of q_psi: D(theta) * psi (h == 0).
VectorXd score(const VectorXd& theta, const NaturalParam& psi);

/// Gaussian log-normalizer g(psi) = -mu'Omega mu / 2 + log|Omega| / 2 - d log(2 pi) / 2.
double log_normalizer(const NaturalParam& psi);

double log_density(const VectorXd& theta, const NaturalParam& psi);

/// n x d draws mu + L z with z from the counter-based stream `seed`.
MatrixXd sample(const NaturalParam& psi, Index n, std::uint64_t seed);
MatrixXd sample(const MomentParam& p, Index n, std::uint64_t seed);

}  // namespace fdvi
