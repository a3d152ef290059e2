#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fdvi/baselines.hpp"
#include "fdvi/fisher_irls.hpp"
#include "fdvi/gaussian_expfam.hpp"
#include "fdvi/targets.hpp"
#include "json.hpp"

namespace fdvi {

enum class Covariate { isotropic, ar1 };

std::string to_string(Covariate c);
Covariate parse_covariate(const std::string& s);

struct GenConfig {
    Index n = 200;
    Index d = 5;
    Covariate covariate = Covariate::isotropic;
    double covariate_variance = 3.0;
    double ar_rho = 0.8;
    double theta_variance = 1.0;
    double tau2 = 5.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GeneratedData {
    Dataset data;
    VectorXd theta_true;
};

/// theta* ~ N(0, theta_variance I); x_i isotropic N(0, covariate_variance I)
/// or a stationary unit-variance AR(1) path across the d coordinates scaled by
/// sqrt(covariate_variance); y_i ~ Bernoulli(logistic(x_i' theta*)).
GeneratedData generate_dataset(const GenConfig& cfg);

struct ErrorMetrics {
    double mean_err = 0.0;  // |mu_hat - mu_ref|_2
    double cov_err = 0.0;   // |Sigma_hat - Sigma_ref|_F
};

ErrorMetrics error_metrics(const MomentParam& fit, const VectorXd& ref_mean, const MatrixXd& ref_cov);
ErrorMetrics error_metrics(const MomentParam& fit, const McmcResult& ref);

struct CoverageCurve {
    std::vector<double> grid;
    std::vector<double> prob;
    double mean_abs_dev = 0.0;
};

/// {0.01, 0.02, ..., 0.99}
std::vector<double> default_coverage_grid();

/// Chi-square quantile with `dof` degrees of freedom.
double chi_square_quantile(double c, Index dof);

/// Fraction of reference samples inside the fit's HPD ellipsoid
/// (theta - mu)' Sigma^{-1} (theta - mu) <= chi2_d(c), for each c.
CoverageCurve coverage_curve(const MomentParam& fit, const MatrixXd& ref_samples,
                             const std::vector<double>& grid = default_coverage_grid());
CoverageCurve coverage_curve(const MomentParam& fit, const McmcResult& ref,
                             const std::vector<double>& grid = default_coverage_grid());

enum class Method { fisher, jj, dsvi };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct BenchmarkSpec {
    std::vector<Index> n_values{200};
    std::vector<Covariate> covariates{Covariate::isotropic};
    int replicates = 10;
    std::vector<Method> methods{Method::fisher, Method::jj, Method::dsvi};
    /// One seed per replicate; derived from `base_seed` when empty.
    std::vector<std::uint64_t> seeds;
    std::uint64_t base_seed = 1;
    Index d = 5;
    GenConfig gen{};
    McmcConfig mcmc{};
    SolverConfig fisher{.rho = 0.5,
                        .max_iter = 500,
                        .tol = 1e-6,
                        .integrator = {},
                        .assembly = Assembly::logistic_taylor};
    DsviConfig dsvi{};

    std::uint64_t replicate_seed(int r) const;
};

struct ReplicateRow {
    Index n = 0;
    Covariate covariate = Covariate::isotropic;
    int replicate = 0;
    std::uint64_t seed = 0;
    Method method = Method::fisher;
    bool ok = false;
    std::string error;
    ErrorMetrics metrics;
    double coverage_mad = 0.0;
    double wall_time_s = 0.0;
    CoverageCurve coverage;
    std::optional<MomentParam> fit;
};

struct ReplicateReference {
    Index n = 0;
    Covariate covariate = Covariate::isotropic;
    int replicate = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double acceptance_rate = 0.0;
    double wall_time_s = 0.0;
};

struct MethodSummary {
    Index n = 0;
    Covariate covariate = Covariate::isotropic;
    Method method = Method::fisher;
    int n_ok = 0;
    double mean_err = 0.0;
    double cov_err = 0.0;
    double coverage_mad = 0.0;
    double wall_time_s = 0.0;
};

struct BenchmarkReport {
    std::vector<ReplicateReference> references;
    std::vector<ReplicateRow> rows;  // sorted by (n, covariate, replicate, method)
    std::vector<MethodSummary> summary;

    /// Writes replicates.csv, summary.csv, coverage.csv and report.json
    /// (all deterministic for fixed seeds) plus timing.csv.
    void write(const std::string& dir) const;
    nlohmann::json to_json() const;
};

/// Every (n, covariate, replicate) cell runs concurrently. A failing replicate
/// or method is recorded and skipped.
BenchmarkReport run_benchmark(const BenchmarkSpec& spec);

/// Per-replicate inputs of a cell, exposed for the contour emitter and tests.
struct ReplicateCell {
    GeneratedData data;
    McmcResult reference;
};
ReplicateCell run_reference(const BenchmarkSpec& spec, Index n, Covariate covariate, std::uint64_t seed);
MomentParam run_method(const BenchmarkSpec& spec, Method method, const Dataset& data, std::uint64_t seed);

/// Grid over the (i, j) coordinate pair with the MCMC kernel density estimate
/// and each fit's Gaussian marginal density. Columns: x, y, mcmc_kde, <methods>.
struct ContourGrid {
    std::vector<std::string> header;
    MatrixXd values;
};
ContourGrid pair_contours(const McmcResult& ref, const std::vector<std::pair<std::string, MomentParam>>& fits,
                          Index i, Index j, int grid_size = 60);

// One-dimensional comparisons ------------------------------------------------------

struct Fit1DRow {
    std::string method;
    double mu = 0.0;
    double sigma = 0.0;
};

struct Fit1DComparison {
    std::vector<Fit1DRow> rows;  // "kl" then "fisher"
    /// Columns: theta, target (grid-normalized), kl, fisher.
    MatrixXd density_grid;
    /// Mean and variance of the grid-normalized target.
    double target_mean = 0.0;
    double target_var = 0.0;
    FitReport fisher_report;

    void write(const std::string& dir) const;
};

/// Fisher fit by quadrature-backed IRLS and KL fit by grid + Nelder-Mead.
Fit1DComparison fit1d_compare(const TargetModel& target, double grid_lo = -10.0, double grid_hi = 10.0,
                              double grid_step = 0.01);

}  // namespace fdvi
