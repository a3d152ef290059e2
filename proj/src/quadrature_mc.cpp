#include "fdvi/quadrature_mc.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fdvi/kernels.hpp"

namespace fdvi {

void IntegratorConfig::validate(Index d) const {
    if (n_nodes < 2) throw std::invalid_argument("n_nodes must be at least 2");
    if (n_samples < 100) throw std::invalid_argument("n_samples must be at least 100");
    if (method == IntegrationMethod::quadrature && d != 1) {
        throw std::invalid_argument("quadrature integration is only available for d = 1");
    }
}

namespace {

// Orthonormal Hermite values p_{n-1}(t), p_n(t) and sum_{j<n} p_j(t)^2.
struct HermiteEval {
    double p_prev;
    double p_n;
    double sum_sq;
};

HermiteEval orthonormal_hermite(int n, double t) {
    double p_prev = 0.0;
    double p = std::pow(std::numbers::pi, -0.25);
    double sum_sq = 0.0;
    for (int j = 0; j < n; ++j) {
        sum_sq += p * p;
        const double next = std::sqrt(2.0 / (j + 1)) * t * p - std::sqrt(static_cast<double>(j) / (j + 1)) * p_prev;
        p_prev = p;
        p = next;
    }
    return {p_prev, p, sum_sq};
}

GaussHermiteRule golub_welsch(int n) {
    // symmetric tridiagonal Jacobi matrix of the Hermite recurrence
    MatrixXd jacobi = MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(0.5 * k);
        jacobi(k - 1, k) = b;
        jacobi(k, k - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(jacobi, Eigen::EigenvaluesOnly);
    GaussHermiteRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        // Newton polish on p_n, then Christoffel weights 1 / sum p_j^2. Eigenvector
        // components lose relative accuracy for the tiny outer weights.
        double t = eig.eigenvalues()(k);
        for (int it = 0; it < 3; ++it) {
            const auto h = orthonormal_hermite(n, t);
            t -= h.p_n / (std::sqrt(2.0 * n) * h.p_prev);
        }
        rule.nodes[static_cast<std::size_t>(k)] = t;
        rule.weights[static_cast<std::size_t>(k)] = 1.0 / orthonormal_hermite(n, t).sum_sq;
    }
    // enforce the exact symmetry of the rule
    for (int k = 0; k < n / 2; ++k) {
        const auto lo = static_cast<std::size_t>(k);
        const auto hi = static_cast<std::size_t>(n - 1 - k);
        const double t = 0.5 * (rule.nodes[hi] - rule.nodes[lo]);
        const double w = 0.5 * (rule.weights[hi] + rule.weights[lo]);
        rule.nodes[lo] = -t;
        rule.nodes[hi] = t;
        rule.weights[lo] = rule.weights[hi] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite_rule(int n_nodes) {
    if (n_nodes < 1) throw std::invalid_argument("Gauss-Hermite rule needs at least one node");
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n_nodes];
    if (!slot) slot = std::make_unique<GaussHermiteRule>(golub_welsch(n_nodes));
    return *slot;
}

double gh_expectation(const std::function<double(double)>& f, double mu, double sigma2, int n_nodes) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("gh_expectation: variance must be positive");
    const auto& rule = gauss_hermite_rule(n_nodes);
    const double scale = std::sqrt(2.0 * sigma2);
    std::vector<double> terms(rule.nodes.size());
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double theta = mu + scale * rule.nodes[k];
        const double v = f(theta);
        if (!std::isfinite(v)) {
            throw IntegrationError("integrand is not finite at node " + std::to_string(k) + " (theta = " +
                                       std::to_string(theta) + ")",
                                   k);
        }
        terms[k] = rule.weights[k] * v;
    }
    return kernels::pairwise_sum(terms) / std::sqrt(std::numbers::pi);
}

MatrixXd StandardDraws::transform(const MomentParam& p) const {
    if (p.dim() != z_.cols()) throw std::invalid_argument("StandardDraws: dimension mismatch");
    MatrixXd out = z_ * p.chol().transpose();
    out.rowwise() += p.mean().transpose();
    return out;
}

McEstimate reduce_draws(const MatrixXd& values) {
    for (Index i = 0; i < values.rows(); ++i) {
        if (!values.row(i).allFinite()) {
            throw IntegrationError("integrand is not finite at draw " + std::to_string(i), static_cast<std::size_t>(i));
        }
    }
    auto m = kernels::parallel::column_moments(values);
    return {std::move(m.mean), std::move(m.std_error)};
}

McEstimate mc_expectation(const VectorFunction& f, const MomentParam& p, const StandardDraws& draws) {
    const MatrixXd thetas = draws.transform(p);
    const Index n = thetas.rows();
    const VectorXd first = f(thetas.row(0).transpose());
    MatrixXd values(n, first.size());
    values.row(0) = first.transpose();
#pragma omp parallel for schedule(static)
    for (Index i = 1; i < n; ++i) values.row(i) = f(thetas.row(i).transpose()).transpose();
    return reduce_draws(values);
}

McEstimate mc_expectation(const VectorFunction& f, const NaturalParam& psi, const IntegratorConfig& cfg) {
    IntegratorConfig mc = cfg;
    mc.method = IntegrationMethod::monte_carlo;
    mc.validate(psi.dim());
    const MomentParam p = natural_to_moment(psi);
    return mc_expectation(f, p, StandardDraws(cfg.seed, cfg.n_samples, p.dim()));
}

// Taylor -------------------------------------------------------------------

namespace {

struct LogisticDerivs {
    double g;   // 1 / (1 + e^u)
    double g1;  // dg/du
    double g2;  // d2g/du2
};

LogisticDerivs complement_derivs(double u) {
    const double g = logistic(-u);
    const double s = g * (1.0 - g);
    return {g, -s, s * (1.0 - 2.0 * g)};
}

}  // namespace

VectorXd fij_gradient(const VectorXd& x_i, Index j, const VectorXd& theta) {
    const auto dv = complement_derivs(x_i.dot(theta));
    VectorXd grad = theta(j) * dv.g1 * x_i;
    grad(j) += dv.g;
    return grad;
}

MatrixXd fij_hessian(const VectorXd& x_i, Index j, const VectorXd& theta) {
    const auto dv = complement_derivs(x_i.dot(theta));
    MatrixXd h = theta(j) * dv.g2 * (x_i * x_i.transpose());
    h.row(j) += dv.g1 * x_i.transpose();
    h.col(j) += dv.g1 * x_i;
    return h;
}

double taylor_expectation_fij(Index i, Index j, const VectorXd& mean, const MatrixXd& cov, const Dataset& data) {
    if (i < 0 || i >= data.n() || j < 0 || j >= data.d()) throw std::out_of_range("taylor_expectation_fij: index");
    if (mean.size() != data.d()) throw std::invalid_argument("taylor_expectation_fij: dimension mismatch");
    const VectorXd x = data.x.row(i).transpose();
    const auto dv = complement_derivs(x.dot(mean));
    // tr(H Sigma) = 2 g' (Sigma x)_j + mu_j g'' x' Sigma x
    const VectorXd sx = cov * x;
    const double trace = 2.0 * dv.g1 * sx(j) + mean(j) * dv.g2 * x.dot(sx);
    return mean(j) * dv.g + 0.5 * trace;
}

double taylor_expectation_fij(Index i, Index j, const MomentParam& p, const Dataset& data) {
    return taylor_expectation_fij(i, j, p.mean(), p.cov(), data);
}

double taylor_expectation_sigmoid(Index i, const VectorXd& mean, const MatrixXd& cov, const Dataset& data) {
    if (i < 0 || i >= data.n()) throw std::out_of_range("taylor_expectation_sigmoid: index");
    if (mean.size() != data.d()) throw std::invalid_argument("taylor_expectation_sigmoid: dimension mismatch");
    const VectorXd x = data.x.row(i).transpose();
    const auto dv = complement_derivs(x.dot(mean));
    return dv.g + 0.5 * dv.g2 * x.dot(cov * x);
}

double taylor_expectation_sigmoid(Index i, const MomentParam& p, const Dataset& data) {
    return taylor_expectation_sigmoid(i, p.mean(), p.cov(), data);
}

}  // namespace fdvi
