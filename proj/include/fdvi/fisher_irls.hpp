#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fdvi/gaussian_expfam.hpp"
#include "fdvi/quadrature_mc.hpp"
#include "fdvi/targets.hpp"
#include "json.hpp"

namespace fdvi {

/// How v_t is assembled. M_t is always closed form.
enum class Assembly {
    generic_mc,       // E[D^T score] by the configured integrator (quadrature for d = 1)
    logistic_taylor,  // closed-form logistic blocks with Taylor-approximated expectations
    logistic_mc,      // same blocks, expectations by Monte Carlo
};

enum class LogisticMethod { taylor, mc };

struct SolverConfig {
    double rho = 0.5;
    int max_iter = 500;
    double tol = 1e-6;
    IntegratorConfig integrator{};
    Assembly assembly = Assembly::generic_mc;

    void validate() const;
};

struct TraceEntry {
    int iter = 0;
    VectorXd psi;
    double delta_inf = 0.0;
    /// Damping actually applied (after any halving).
    double rho = 0.0;
    std::optional<double> objective;
};

struct FitReport {
    NaturalParam psi_star;
    MomentParam moment;
    int iterations = 0;
    bool converged = false;
    std::vector<TraceEntry> trace;
    double wall_time_s = 0.0;

    nlohmann::json to_json() const;
};

/// Reads `mu` and row-major `sigma` from a FitReport (or any JSON with those keys).
MomentParam moment_from_json(const nlohmann::json& j);

struct DivergenceEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// `reduced` integrates |z - D(theta) psi|^2, `direct` integrates
/// |score_target - score_q|^2 with score_q computed from moments. The two
/// are algebraically identical.
enum class DivergenceForm { reduced, direct };

DivergenceEstimate fisher_divergence(const NaturalParam& psi, const TargetModel& target, const IntegratorConfig& cfg,
                                     DivergenceForm form = DivergenceForm::reduced);
DivergenceEstimate fisher_divergence(const NaturalParam& psi, const TargetModel& target, const StandardDraws& draws,
                                     DivergenceForm form = DivergenceForm::reduced);

/// E[D^T D] under q, exact from the first two moments.
MatrixXd assemble_Mt(const MomentParam& p);
MatrixXd assemble_Mt(const NaturalParam& psi);

/// E[D^T score_target] under q. Exact when the target score is affine,
/// Gauss-Hermite for d = 1 with quadrature configured, Monte Carlo otherwise.
McEstimate assemble_vt_generic(const NaturalParam& psi, const TargetModel& target, const IntegratorConfig& cfg);
McEstimate assemble_vt_generic(const MomentParam& p, const TargetModel& target, const IntegratorConfig& cfg,
                               const StandardDraws* draws);

/// Logistic-regression v_t in block form. `draws` must be given for
/// LogisticMethod::mc (standard errors are zero for taylor).
McEstimate assemble_vt_logistic(const NaturalParam& psi, const Dataset& data, LogisticMethod method,
                                const IntegratorConfig& cfg);
McEstimate assemble_vt_logistic(const MomentParam& p, const Dataset& data, LogisticMethod method,
                                const StandardDraws* draws);

/// rho * M^{-1} v + (1 - rho) * psi_t, with M lightly regularized and
/// Cholesky-factored. Throws SolverFailure carrying `iteration`.
NaturalParam irls_step(const NaturalParam& psi_t, const VectorXd& v, const MatrixXd& m, double rho,
                       int iteration = 0);

FitReport fit(const TargetModel& target, const NaturalParam& init, const SolverConfig& cfg);

/// One update of the fixed-variance normal-mean family N(psi, sigma2).
double normal_mean_update(double psi_t, double sigma2, const TargetModel& target, int n_nodes = 64);

struct NormalMeanFit {
    double mean = 0.0;
    int iterations = 0;
    bool converged = false;
};

NormalMeanFit normal_mean_fit(const TargetModel& target, double sigma2, double init, double tol = 1e-12,
                              int max_iter = 100000);

/// Logistic targets start at the prior; 1D targets at the grid mode on
/// [-5, 5] (step 1e-3) with unit variance; anything else at N(0, I).
NaturalParam default_init(const TargetModel& target);

}  // namespace fdvi
