#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "fdvi/gaussian_expfam.hpp"

namespace fdvi {

/// score(theta) = matrix * theta + offset.
struct AffineScore {
    MatrixXd matrix;
    VectorXd offset;
};

/// Differentiable unnormalized log posterior.
class TargetModel {
public:
    virtual ~TargetModel() = default;

    virtual Index dim() const = 0;
    virtual double log_unnorm(const VectorXd& theta) const = 0;
    /// Gradient of log_unnorm with respect to theta.
    virtual VectorXd score(const VectorXd& theta) const = 0;

    /// Scores for each row of `thetas` (k x d -> k x d). The default evaluates
    /// rows in parallel; targets with a cheaper batched form override it.
    virtual MatrixXd score_batch(const MatrixXd& thetas) const;

    /// Present when the score is affine in theta, which lets expectations of
    /// D(theta)^T score(theta) be computed exactly from Gaussian moments.
    virtual std::optional<AffineScore> affine_score() const { return std::nullopt; }
};

/// Logistic-regression data. Rows of `x` are observations, `y` is 0/1.
struct Dataset {
    MatrixXd x;
    VectorXd y;
    double tau2 = 5.0;

    Index n() const noexcept { return x.rows(); }
    Index d() const noexcept { return x.cols(); }

    /// Throws std::invalid_argument on a broken invariant.
    void validate() const;

    /// CSV with header `y,x1,...,xd`.
    static Dataset load_csv(const std::string& path, double tau2);
    void save_csv(const std::string& path) const;
};

/// Numerically stable log(1 + exp(u)).
double log1p_exp(double u) noexcept;
/// 1 / (1 + exp(-u)).
double logistic(double u) noexcept;

/// Posterior of Bernoulli-logit regression with a N(0, tau2 I) prior.
class LogisticTarget final : public TargetModel {
public:
    explicit LogisticTarget(Dataset data);

    Index dim() const override { return data_.d(); }
    double log_unnorm(const VectorXd& theta) const override;
    VectorXd score(const VectorXd& theta) const override;
    MatrixXd score_batch(const MatrixXd& thetas) const override;

    const Dataset& data() const noexcept { return data_; }

private:
    Dataset data_;
};

LogisticTarget logistic_target(Dataset data);

/// Unnormalized N(mean, cov); used for self-consistency checks.
class GaussianTarget final : public TargetModel {
public:
    GaussianTarget(VectorXd mean, const MatrixXd& cov);

    Index dim() const override { return mean_.size(); }
    double log_unnorm(const VectorXd& theta) const override;
    VectorXd score(const VectorXd& theta) const override;
    std::optional<AffineScore> affine_score() const override;

    const VectorXd& mean() const noexcept { return mean_; }
    const MatrixXd& precision() const noexcept { return precision_; }

private:
    VectorXd mean_;
    MatrixXd precision_;
};

// One-dimensional test densities.

struct StudentT {
    double nu = 1.0;
};

/// w * N(mu1, 1) + (1 - w) * N(mu2, 1).
struct NormalMixture {
    double w = 0.75;
    double mu1 = 0.0;
    double mu2 = 2.5;
};

/// Standard skew normal 2 phi(theta) Phi(alpha theta).
struct SkewNormal {
    double alpha = 6.0;
};

using Target1D = std::variant<StudentT, NormalMixture, SkewNormal>;

std::string describe(const Target1D& t);

double student_t_log_unnorm(double theta, double nu);
double student_t_score(double theta, double nu);
double mixture_log_unnorm(double theta, double w, double mu1, double mu2);
double mixture_score(double theta, double w, double mu1, double mu2);
/// log Phi(x) with an asymptotic tail for x < -30.
double log_normal_cdf(double x);
/// phi(x) / Phi(x) with the same tail treatment.
double inverse_mills_ratio(double x);
double skew_normal_log_unnorm(double theta, double alpha);
double skew_normal_score(double theta, double alpha);

class Target1DModel final : public TargetModel {
public:
    explicit Target1DModel(Target1D target);

    Index dim() const override { return 1; }
    double log_unnorm(const VectorXd& theta) const override { return log_unnorm(theta(0)); }
    VectorXd score(const VectorXd& theta) const override;

    double log_unnorm(double theta) const;
    double score(double theta) const;
    const Target1D& variant() const noexcept { return target_; }

private:
    Target1D target_;
};

}  // namespace fdvi
