#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "fdvi/gaussian_expfam.hpp"
#include "fdvi/targets.hpp"
#include "json.hpp"

namespace fdvi {

// Random-walk Metropolis-Hastings -------------------------------------------------

struct McmcConfig {
    int n_iter = 100000;
    int burn_in = 20000;
    /// Fixed proposal scale; empty means adapt toward 0.234 acceptance during burn-in.
    std::optional<double> proposal_scale;
    std::uint64_t seed = 0;
    /// Starting point; zero vector when empty.
    std::optional<VectorXd> init;

    void validate() const;
};

struct McmcResult {
    MatrixXd samples;  // (n_iter - burn_in) x d
    double acceptance_rate = 0.0;  // post burn-in
    double proposal_scale = 0.0;   // frozen value used after burn-in
    VectorXd mean;
    MatrixXd cov;

    nlohmann::json summary_json() const;
    void save_samples_csv(const std::string& path) const;
};

/// Sample mean and (n - 1)-normalized covariance of the rows.
void sample_moments(const MatrixXd& samples, VectorXd& mean, MatrixXd& cov);

/// Acceptance probability min(1, exp(log_ratio)).
double mh_accept_probability(double log_ratio) noexcept;

McmcResult metropolis_hastings(const TargetModel& target, const McmcConfig& cfg);

// Jaakkola-Jordan bound ---------------------------------------------------------------

/// tanh(xi / 2) / (4 xi), continuous at 0 with value 1/8.
double jj_lambda(double xi) noexcept;

struct JjFit {
    MomentParam moment;
    int sweeps = 0;
    bool converged = false;
};

JjFit jj_fit(const Dataset& data, double tol = 1e-8, int max_sweeps = 1000);

// Doubly stochastic variational inference -----------------------------------------------

struct DsviConfig {
    int n_steps = 20000;
    double step_size = 1e-2;  // decays as step_size / sqrt(t)
    std::uint64_t seed = 0;
};

/// Reparameterized SGD on the ELBO over (mu, L), softplus-positive diagonal,
/// one draw per step, full-data gradients. Starts at the prior. An empty
/// dataset is accepted (the optimum is then the prior). Throws
/// NumericalError if |mu| exceeds 1e6.
MomentParam dsvi_fit(const Dataset& data, const DsviConfig& cfg);

// One-dimensional KL fits ---------------------------------------------------------------

/// E_q[log q - log pi~] for q = N(mu, sigma^2), by 128-node Gauss-Hermite.
double kl_divergence_1d(double mu, double sigma, const TargetModel& target);

struct Normal1D {
    double mu = 0.0;
    double sigma = 1.0;
};

/// Grid search over mu in [-10, 10] x sigma in [0.05, 10] (200 x 200, sigma
/// log-spaced) followed by Nelder-Mead on (mu, log sigma).
/// Throws IntegrationError if the target is non-finite on a quadrature node.
Normal1D kl_fit_1d(const TargetModel& target);

}  // namespace fdvi
