#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fdvi/gaussian_expfam.hpp"

// Data-parallel inner loops of the solver and the harness. Every kernel has a
// plain serial reference in `serial` and an OpenMP version in `parallel`; the
// two produce bit-identical results because per-item work is independent and
// every reduction runs through `pairwise_sum` in a fixed order.

namespace fdvi::kernels {

/// Fixed-order pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values) noexcept;

/// Column means of a k x c matrix and the standard errors sd / sqrt(k).
struct ColumnMoments {
    VectorXd mean;
    VectorXd std_error;
};

namespace serial {

ColumnMoments column_moments(const MatrixXd& values);

/// Row i: sum_l x_l (y_l - logistic(x_l' theta_i)) - theta_i / tau2.
MatrixXd logistic_scores(const MatrixXd& x, const VectorXd& y, double tau2, const MatrixXd& thetas);

/// Row i: (D(theta_i)^T z_i)^T, a k x m matrix.
MatrixXd jacobian_t_products(const MatrixXd& thetas, const MatrixXd& z);

/// Entry i: |z_i - D(theta_i) psi|^2.
VectorXd squared_residuals(const MatrixXd& thetas, const MatrixXd& z, const VectorXd& psi);

/// Squared Mahalanobis distance of each row to `mean` under covariance L L^T.
VectorXd mahalanobis_sq(const MatrixXd& samples, const VectorXd& mean, const MatrixXd& chol_lower);

}  // namespace serial

namespace parallel {

ColumnMoments column_moments(const MatrixXd& values);
MatrixXd logistic_scores(const MatrixXd& x, const VectorXd& y, double tau2, const MatrixXd& thetas);
MatrixXd jacobian_t_products(const MatrixXd& thetas, const MatrixXd& z);
VectorXd squared_residuals(const MatrixXd& thetas, const MatrixXd& z, const VectorXd& psi);
VectorXd mahalanobis_sq(const MatrixXd& samples, const VectorXd& mean, const MatrixXd& chol_lower);

}  // namespace parallel

}  // namespace fdvi::kernels
