#include "fdvi/targets.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fdvi/io.hpp"
#include "fdvi/kernels.hpp"

namespace fdvi {

namespace {

constexpr double kMillsTail = -30.0;

// sum_k (-1)^k (2k-1)!! / x^(2k), k = 0..7: Phi(x) ~ phi(x) / (-x) * series for x -> -inf.
// At |x| = 30 the first omitted term is below 1e-18.
double mills_series(double x) {
    const double r = 1.0 / (x * x);
    return 1.0 - r * (1.0 - r * (3.0 - r * (15.0 - r * (105.0 - r * (945.0 - r * (10395.0 - r * 135135.0))))));
}

}  // namespace

MatrixXd TargetModel::score_batch(const MatrixXd& thetas) const {
    MatrixXd out(thetas.rows(), thetas.cols());
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < thetas.rows(); ++i) {
        out.row(i) = score(thetas.row(i).transpose()).transpose();
    }
    return out;
}

// Dataset ---------------------------------------------------------------

void Dataset::validate() const {
    if (x.rows() < 1) throw std::invalid_argument("dataset must have at least one observation");
    if (x.cols() < 1) throw std::invalid_argument("dataset must have at least one covariate");
    if (y.size() != x.rows()) throw std::invalid_argument("y length does not match rows of x");
    if (!(tau2 > 0.0) || !std::isfinite(tau2)) throw std::invalid_argument("tau2 must be positive");
    if (!x.allFinite()) throw std::invalid_argument("x contains non-finite values");
    for (Index i = 0; i < y.size(); ++i) {
        if (y(i) != 0.0 && y(i) != 1.0) {
            throw std::invalid_argument("y[" + std::to_string(i) + "] is not 0 or 1");
        }
    }
}

Dataset Dataset::load_csv(const std::string& path, double tau2) {
    auto table = io::read_csv(path);
    if (table.header.size() < 2 || table.header.front() != "y") {
        throw std::invalid_argument(path + ": header must be y,x1,...,xd");
    }
    for (std::size_t j = 1; j < table.header.size(); ++j) {
        if (table.header[j] != "x" + std::to_string(j)) {
            throw std::invalid_argument(path + ": expected column x" + std::to_string(j) + ", got " + table.header[j]);
        }
    }
    Dataset data;
    data.y = table.values.col(0);
    data.x = table.values.rightCols(table.values.cols() - 1);
    data.tau2 = tau2;
    data.validate();
    return data;
}

void Dataset::save_csv(const std::string& path) const {
    std::vector<std::string> header{"y"};
    for (Index j = 0; j < d(); ++j) header.push_back("x" + std::to_string(j + 1));
    MatrixXd values(n(), d() + 1);
    values.col(0) = y;
    values.rightCols(d()) = x;
    io::write_csv(path, header, values);
}

// Logistic regression ------------------------------------------------------

double log1p_exp(double u) noexcept { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

double logistic(double u) noexcept {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

LogisticTarget::LogisticTarget(Dataset data) : data_(std::move(data)) { data_.validate(); }

double LogisticTarget::log_unnorm(const VectorXd& theta) const {
    if (theta.size() != dim()) throw std::invalid_argument("logistic target: dimension mismatch");
    const VectorXd u = data_.x * theta;
    double ll = 0.0;
    for (Index i = 0; i < u.size(); ++i) ll += data_.y(i) * u(i) - log1p_exp(u(i));
    return ll - theta.squaredNorm() / (2.0 * data_.tau2);
}

VectorXd LogisticTarget::score(const VectorXd& theta) const {
    if (theta.size() != dim()) throw std::invalid_argument("logistic target: dimension mismatch");
    const VectorXd u = data_.x * theta;
    VectorXd resid(u.size());
    for (Index i = 0; i < u.size(); ++i) resid(i) = data_.y(i) - logistic(u(i));
    return data_.x.transpose() * resid - theta / data_.tau2;
}

MatrixXd LogisticTarget::score_batch(const MatrixXd& thetas) const {
    if (thetas.cols() != dim()) throw std::invalid_argument("logistic target: dimension mismatch");
    return kernels::parallel::logistic_scores(data_.x, data_.y, data_.tau2, thetas);
}

LogisticTarget logistic_target(Dataset data) { return LogisticTarget(std::move(data)); }

// Gaussian -----------------------------------------------------------------

GaussianTarget::GaussianTarget(VectorXd mean, const MatrixXd& cov) : mean_(std::move(mean)) {
    const MomentParam p(mean_, cov);
    precision_ = p.chol().transpose().triangularView<Eigen::Upper>().solve(
        p.chol().triangularView<Eigen::Lower>().solve(MatrixXd::Identity(dim(), dim())));
    precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
}

double GaussianTarget::log_unnorm(const VectorXd& theta) const {
    const VectorXd r = theta - mean_;
    return -0.5 * r.dot(precision_ * r);
}

VectorXd GaussianTarget::score(const VectorXd& theta) const { return -precision_ * (theta - mean_); }

std::optional<AffineScore> GaussianTarget::affine_score() const {
    return AffineScore{-precision_, precision_ * mean_};
}

// One-dimensional targets ----------------------------------------------------

std::string describe(const Target1D& t) {
    std::ostringstream out;
    std::visit(
        [&out](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, StudentT>) {
                out << "student-t(nu=" << v.nu << ")";
            } else if constexpr (std::is_same_v<T, NormalMixture>) {
                out << "mixture(w=" << v.w << ",mu1=" << v.mu1 << ",mu2=" << v.mu2 << ")";
            } else {
                out << "skew-normal(alpha=" << v.alpha << ")";
            }
        },
        t);
    return out.str();
}

double student_t_log_unnorm(double theta, double nu) { return -0.5 * (nu + 1.0) * std::log1p(theta * theta / nu); }

double student_t_score(double theta, double nu) { return -(nu + 1.0) * theta / (nu + theta * theta); }

double mixture_log_unnorm(double theta, double w, double mu1, double mu2) {
    const double l1 = std::log(w) - 0.5 * (theta - mu1) * (theta - mu1);
    const double l2 = std::log1p(-w) - 0.5 * (theta - mu2) * (theta - mu2);
    const double hi = std::max(l1, l2);
    return hi + std::log(std::exp(l1 - hi) + std::exp(l2 - hi));
}

double mixture_score(double theta, double w, double mu1, double mu2) {
    const double l1 = std::log(w) - 0.5 * (theta - mu1) * (theta - mu1);
    const double l2 = std::log1p(-w) - 0.5 * (theta - mu2) * (theta - mu2);
    const double hi = std::max(l1, l2);
    const double e1 = std::exp(l1 - hi);
    const double e2 = std::exp(l2 - hi);
    const double r1 = e1 / (e1 + e2);
    const double r2 = e2 / (e1 + e2);
    return -(r1 * (theta - mu1) + r2 * (theta - mu2));
}

double log_normal_cdf(double x) {
    if (x < kMillsTail) {
        return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(-x) + std::log(mills_series(x));
    }
    return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
}

double inverse_mills_ratio(double x) {
    if (x < kMillsTail) return -x / mills_series(x);
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return phi / (0.5 * std::erfc(-x / std::numbers::sqrt2));
}

double skew_normal_log_unnorm(double theta, double alpha) { return -0.5 * theta * theta + log_normal_cdf(alpha * theta); }

double skew_normal_score(double theta, double alpha) { return -theta + alpha * inverse_mills_ratio(alpha * theta); }

Target1DModel::Target1DModel(Target1D target) : target_(target) {
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, StudentT>) {
                if (!(v.nu > 0.0)) throw std::invalid_argument("student-t requires nu > 0");
            } else if constexpr (std::is_same_v<T, NormalMixture>) {
                if (!(v.w > 0.0 && v.w <= 1.0)) throw std::invalid_argument("mixture weight must lie in (0, 1]");
            }
        },
        target_);
}

double Target1DModel::log_unnorm(double theta) const {
    return std::visit(
        [theta](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, StudentT>) return student_t_log_unnorm(theta, v.nu);
            else if constexpr (std::is_same_v<T, NormalMixture>) return mixture_log_unnorm(theta, v.w, v.mu1, v.mu2);
            else return skew_normal_log_unnorm(theta, v.alpha);
        },
        target_);
}

double Target1DModel::score(double theta) const {
    return std::visit(
        [theta](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, StudentT>) return student_t_score(theta, v.nu);
            else if constexpr (std::is_same_v<T, NormalMixture>) return mixture_score(theta, v.w, v.mu1, v.mu2);
            else return skew_normal_score(theta, v.alpha);
        },
        target_);
}

VectorXd Target1DModel::score(const VectorXd& theta) const {
    if (theta.size() != 1) throw std::invalid_argument("1D target: dimension mismatch");
    return VectorXd::Constant(1, score(theta(0)));
}

}  // namespace fdvi
