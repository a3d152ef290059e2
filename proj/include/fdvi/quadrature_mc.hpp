#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "fdvi/gaussian_expfam.hpp"
#include "fdvi/rng.hpp"
#include "fdvi/targets.hpp"

namespace fdvi {

enum class IntegrationMethod { quadrature, monte_carlo, taylor };

struct IntegratorConfig {
    IntegrationMethod method = IntegrationMethod::monte_carlo;
    int n_nodes = 64;
    int n_samples = 2000;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument; quadrature is only allowed for d == 1.
    void validate(Index d) const;
};

/// Gauss-Hermite rule for the weight exp(-t^2) (physicists' convention).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch rule, computed once per node count and cached.
const GaussHermiteRule& gauss_hermite_rule(int n_nodes);

/// E[f(theta)] for theta ~ N(mu, sigma2), using theta = mu + sqrt(2 sigma2) t.
/// Throws IntegrationError (location = node index) if f is non-finite at a node.
double gh_expectation(const std::function<double(double)>& f, double mu, double sigma2, int n_nodes);

/// Standard-normal draws held fixed across solver iterations (common random
/// numbers) and mapped through the current Cholesky factor.
class StandardDraws {
public:
    StandardDraws(std::uint64_t seed, Index n, Index d) : z_(standard_normal_matrix(seed, n, d)) {}

    Index size() const noexcept { return z_.rows(); }
    const MatrixXd& standard() const noexcept { return z_; }
    /// Rows mu + L z_i.
    MatrixXd transform(const MomentParam& p) const;

private:
    MatrixXd z_;
};

struct McEstimate {
    VectorXd mean;
    VectorXd std_error;
};

using VectorFunction = std::function<VectorXd(const VectorXd&)>;

/// Sample mean of f over draws from q_psi with per-component standard errors.
/// f is evaluated in parallel; the reduction is fixed-order, so the result
/// depends only on cfg.seed. Throws IntegrationError (location = draw index).
McEstimate mc_expectation(const VectorFunction& f, const NaturalParam& psi, const IntegratorConfig& cfg);
McEstimate mc_expectation(const VectorFunction& f, const MomentParam& p, const StandardDraws& draws);

/// Reduce a k x c matrix of per-draw values to means and standard errors,
/// checking finiteness.
McEstimate reduce_draws(const MatrixXd& values);

// Second-order Taylor expectations for the logistic-regression integrands.

/// Hessian of f_ij(theta) = theta_j / (1 + exp(x_i' theta)) at theta.
MatrixXd fij_hessian(const VectorXd& x_i, Index j, const VectorXd& theta);
/// Gradient of f_ij at theta.
VectorXd fij_gradient(const VectorXd& x_i, Index j, const VectorXd& theta);

/// f_ij(mu) + tr(H_ij(mu) Sigma) / 2.
double taylor_expectation_fij(Index i, Index j, const MomentParam& p, const Dataset& data);
/// Same construction for 1 / (1 + exp(x_i' theta)).
double taylor_expectation_sigmoid(Index i, const MomentParam& p, const Dataset& data);

// Raw-moment overloads; these accept a singular (e.g. zero) covariance.
double taylor_expectation_fij(Index i, Index j, const VectorXd& mean, const MatrixXd& cov, const Dataset& data);
double taylor_expectation_sigmoid(Index i, const VectorXd& mean, const MatrixXd& cov, const Dataset& data);

}  // namespace fdvi
