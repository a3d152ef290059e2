#include "fdvi/baselines.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "fdvi/io.hpp"
#include "fdvi/quadrature_mc.hpp"
#include "fdvi/rng.hpp"

namespace fdvi {

// Metropolis-Hastings -----------------------------------------------------------

void McmcConfig::validate() const {
    if (n_iter < 2) throw std::invalid_argument("n_iter must be at least 2");
    if (burn_in < 0 || burn_in >= n_iter) throw std::invalid_argument("burn_in must lie in [0, n_iter)");
    if (proposal_scale && !(*proposal_scale > 0.0)) throw std::invalid_argument("proposal_scale must be positive");
}

void sample_moments(const MatrixXd& samples, VectorXd& mean, MatrixXd& cov) {
    const Index n = samples.rows();
    mean = samples.colwise().mean().transpose();
    const MatrixXd centered = samples.rowwise() - mean.transpose();
    cov = n > 1 ? MatrixXd((centered.transpose() * centered) / static_cast<double>(n - 1))
                : MatrixXd::Zero(samples.cols(), samples.cols());
    cov = 0.5 * (cov + cov.transpose()).eval();
}

double mh_accept_probability(double log_ratio) noexcept {
    if (std::isnan(log_ratio)) return 0.0;
    return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

McmcResult metropolis_hastings(const TargetModel& target, const McmcConfig& cfg) {
    cfg.validate();
    const Index d = target.dim();
    VectorXd current = cfg.init ? *cfg.init : VectorXd::Zero(d);
    if (current.size() != d) throw std::invalid_argument("metropolis_hastings: init has wrong dimension");
    double current_lp = target.log_unnorm(current);
    if (!std::isfinite(current_lp)) throw NumericalError("log density is not finite at the initial point");

    RngStream rng(cfg.seed);
    double log_scale = std::log(cfg.proposal_scale.value_or(2.38 / std::sqrt(static_cast<double>(d))));
    constexpr double kTargetAcceptance = 0.234;

    McmcResult out;
    out.samples.resize(cfg.n_iter - cfg.burn_in, d);
    long accepted = 0;
    for (int t = 0; t < cfg.n_iter; ++t) {
        const double scale = std::exp(log_scale);
        const VectorXd proposal = current + scale * rng.normal_vector(d);
        const double proposal_lp = target.log_unnorm(proposal);
        const double alpha = mh_accept_probability(proposal_lp - current_lp);
        const bool accept = rng.uniform() < alpha;
        if (accept) {
            current = proposal;
            current_lp = proposal_lp;
        }
        if (t < cfg.burn_in) {
            // Robbins-Monro on log scale, frozen after burn-in
            if (!cfg.proposal_scale) log_scale += std::pow(t + 1.0, -0.6) * (alpha - kTargetAcceptance);
        } else {
            accepted += accept ? 1 : 0;
            out.samples.row(t - cfg.burn_in) = current.transpose();
        }
    }
    out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.n_iter - cfg.burn_in);
    out.proposal_scale = std::exp(log_scale);
    sample_moments(out.samples, out.mean, out.cov);
    return out;
}

nlohmann::json McmcResult::summary_json() const {
    return {{"n_samples", samples.rows()},
            {"acceptance_rate", acceptance_rate},
            {"proposal_scale", proposal_scale},
            {"mean", io::to_json(mean)},
            {"cov", io::to_json_row_major(cov)}};
}

void McmcResult::save_samples_csv(const std::string& path) const {
    std::vector<std::string> header;
    for (Index j = 0; j < samples.cols(); ++j) header.push_back("theta" + std::to_string(j + 1));
    io::write_csv(path, header, samples);
}

// Jaakkola-Jordan -------------------------------------------------------------------

double jj_lambda(double xi) noexcept {
    const double a = std::abs(xi);
    if (a < 1e-6) return 0.125 - a * a / 96.0;
    return std::tanh(0.5 * a) / (4.0 * a);
}

JjFit jj_fit(const Dataset& data, double tol, int max_sweeps) {
    data.validate();
    const Index n = data.n();
    const Index d = data.d();
    const MatrixXd prior_precision = MatrixXd::Identity(d, d) / data.tau2;
    const VectorXd b = data.x.transpose() * (data.y.array() - 0.5).matrix();

    VectorXd xi = (data.x.rowwise().squaredNorm() * data.tau2).cwiseSqrt();
    MatrixXd sigma = data.tau2 * MatrixXd::Identity(d, d);
    VectorXd mu = VectorXd::Zero(d);
    int sweeps = 0;
    bool converged = false;
    while (sweeps < max_sweeps) {
        ++sweeps;
        VectorXd lam(n);
        for (Index i = 0; i < n; ++i) lam(i) = jj_lambda(xi(i));
        const MatrixXd precision = prior_precision + 2.0 * data.x.transpose() * lam.asDiagonal() * data.x;
        const Eigen::LLT<MatrixXd> llt(precision);
        sigma = llt.solve(MatrixXd::Identity(d, d));
        sigma = 0.5 * (sigma + sigma.transpose()).eval();
        mu = llt.solve(b);
        const MatrixXd second = sigma + mu * mu.transpose();
        VectorXd next(n);
        for (Index i = 0; i < n; ++i) {
            const VectorXd x = data.x.row(i).transpose();
            next(i) = std::sqrt(std::max(0.0, x.dot(second * x)));
        }
        const double change = (next - xi).cwiseAbs().maxCoeff();
        xi = next;
        if (change <= tol) {
            converged = true;
            break;
        }
    }
    return {MomentParam(mu, sigma), sweeps, converged};
}

// DSVI -------------------------------------------------------------------------------

namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

}  // namespace

MomentParam dsvi_fit(const Dataset& data, const DsviConfig& cfg) {
    const Index d = data.d();
    if (d < 1) throw std::invalid_argument("dsvi_fit: dataset has no covariates");
    if (data.y.size() != data.x.rows()) throw std::invalid_argument("dsvi_fit: y length does not match x");
    if (!(data.tau2 > 0.0)) throw std::invalid_argument("dsvi_fit: tau2 must be positive");
    if (cfg.n_steps < 1 || !(cfg.step_size > 0.0)) throw std::invalid_argument("dsvi_fit: bad schedule");

    VectorXd mu = VectorXd::Zero(d);
    MatrixXd lower = MatrixXd::Zero(d, d);  // strictly lower part; diagonal via softplus(gamma)
    VectorXd gamma = VectorXd::Constant(d, softplus_inverse(std::sqrt(data.tau2)));
    RngStream rng(cfg.seed);

    const auto factor = [&] {
        MatrixXd l = lower;
        for (Index i = 0; i < d; ++i) l(i, i) = softplus(gamma(i));
        return l;
    };

    for (int t = 1; t <= cfg.n_steps; ++t) {
        const MatrixXd l = factor();
        const VectorXd z = rng.normal_vector(d);
        const VectorXd theta = mu + l * z;
        VectorXd grad = -theta / data.tau2;
        if (data.x.rows() > 0) {
            const VectorXd u = data.x * theta;
            VectorXd resid(u.size());
            for (Index i = 0; i < u.size(); ++i) resid(i) = data.y(i) - logistic(u(i));
            grad += data.x.transpose() * resid;
        }
        const double eta = cfg.step_size / std::sqrt(static_cast<double>(t));
        for (Index i = 0; i < d; ++i) {
            for (Index j = 0; j < i; ++j) lower(i, j) += eta * grad(i) * z(j);
            const double lii = l(i, i);
            gamma(i) += eta * (grad(i) * z(i) + 1.0 / lii) * logistic(gamma(i));
        }
        mu += eta * grad;
        if (!mu.allFinite() || mu.norm() > 1e6) {
            throw NumericalError("dsvi diverged at step " + std::to_string(t) + " (|mu| = " +
                                 std::to_string(mu.norm()) + ")");
        }
    }
    const MatrixXd l = factor();
    return MomentParam(mu, l * l.transpose());
}

// KL in one dimension -----------------------------------------------------------------

double kl_divergence_1d(double mu, double sigma, const TargetModel& target) {
    if (!(sigma > 0.0)) throw std::invalid_argument("kl_divergence_1d: sigma must be positive");
    if (target.dim() != 1) throw std::invalid_argument("kl_divergence_1d requires a 1D target");
    const double neg_entropy = -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * sigma * sigma);
    const double cross = gh_expectation([&](double t) { return target.log_unnorm(VectorXd::Constant(1, t)); }, mu,
                                        sigma * sigma, 128);
    return neg_entropy - cross;
}

namespace {

struct NmContext {
    const TargetModel* target;
};

double nm_objective(const gsl_vector* x, void* params) {
    const auto* ctx = static_cast<const NmContext*>(params);
    const double mu = gsl_vector_get(x, 0);
    const double log_sigma = gsl_vector_get(x, 1);
    if (!std::isfinite(mu) || std::abs(log_sigma) > 20.0) return std::numeric_limits<double>::max();
    try {
        return kl_divergence_1d(mu, std::exp(log_sigma), *ctx->target);
    } catch (const IntegrationError&) {
        return std::numeric_limits<double>::max();
    }
}

}  // namespace

Normal1D kl_fit_1d(const TargetModel& target) {
    if (target.dim() != 1) throw std::invalid_argument("kl_fit_1d requires a 1D target");
    constexpr int kGrid = 200;
    Normal1D best;
    double best_value = std::numeric_limits<double>::infinity();
    const double log_lo = std::log(0.05);
    const double log_hi = std::log(10.0);
    for (int a = 0; a < kGrid; ++a) {
        const double mu = -10.0 + 20.0 * a / (kGrid - 1);
        for (int b = 0; b < kGrid; ++b) {
            const double sigma = std::exp(log_lo + (log_hi - log_lo) * b / (kGrid - 1));
            const double value = kl_divergence_1d(mu, sigma, target);
            if (value < best_value) {
                best_value = value;
                best = {mu, sigma};
            }
        }
    }

    NmContext ctx{&target};
    gsl_multimin_function fn{&nm_objective, 2, &ctx};
    gsl_vector* x = gsl_vector_alloc(2);
    gsl_vector* step = gsl_vector_alloc(2);
    gsl_vector_set(x, 0, best.mu);
    gsl_vector_set(x, 1, std::log(best.sigma));
    gsl_vector_set_all(step, 0.05);
    gsl_multimin_fminimizer* nm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
    gsl_multimin_fminimizer_set(nm, &fn, x, step);
    for (int iter = 0; iter < 5000; ++iter) {
        if (gsl_multimin_fminimizer_iterate(nm) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(nm), 1e-11) == GSL_SUCCESS) break;
    }
    Normal1D out{gsl_vector_get(nm->x, 0), std::exp(gsl_vector_get(nm->x, 1))};
    gsl_multimin_fminimizer_free(nm);
    gsl_vector_free(step);
    gsl_vector_free(x);
    return out;
}

}  // namespace fdvi
