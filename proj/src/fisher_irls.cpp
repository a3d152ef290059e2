#include "fdvi/fisher_irls.hpp"

#include <chrono>
#include <limits>
#include <cmath>
#include <stdexcept>

#include "fdvi/io.hpp"
#include "fdvi/kernels.hpp"

namespace fdvi {

void SolverConfig::validate() const {
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
}

nlohmann::json FitReport::to_json() const {
    nlohmann::json j;
    j["psi_star"] = io::to_json(psi_star.vec());
    j["mu"] = io::to_json(moment.mean());
    j["sigma"] = io::to_json_row_major(moment.cov());
    j["iterations"] = iterations;
    j["converged"] = converged;
    auto tr = nlohmann::json::array();
    for (const auto& e : trace) {
        nlohmann::json row{{"iter", e.iter}, {"delta_inf", e.delta_inf}, {"rho", e.rho}};
        if (e.objective) row["objective"] = *e.objective;
        tr.push_back(std::move(row));
    }
    j["trace"] = std::move(tr);
    j["wall_time_s"] = wall_time_s;
    return j;
}

MomentParam moment_from_json(const nlohmann::json& j) {
    const VectorXd mu = io::vector_from_json(j.at("mu"));
    return MomentParam(mu, io::matrix_from_json_row_major(j.at("sigma"), mu.size()));
}

// Divergence -----------------------------------------------------------------

namespace {

bool use_quadrature(const IntegratorConfig& cfg, Index d) {
    return d == 1 && cfg.method == IntegrationMethod::quadrature;
}

DivergenceEstimate divergence_quadrature(const NaturalParam& psi, const MomentParam& p, const TargetModel& target,
                                         const IntegratorConfig& cfg, DivergenceForm form) {
    const double a = psi[0];
    const double b = psi[1];
    const double mu = p.mean()(0);
    const double s2 = p.cov()(0, 0);
    const auto integrand = [&](double theta) {
        const double z = target.score(VectorXd::Constant(1, theta))(0);
        const double q = form == DivergenceForm::reduced ? 2.0 * a * theta + b : -(theta - mu) / s2;
        return (z - q) * (z - q);
    };
    return {gh_expectation(integrand, mu, s2, cfg.n_nodes), 0.0};
}

}  // namespace

DivergenceEstimate fisher_divergence(const NaturalParam& psi, const TargetModel& target, const StandardDraws& draws,
                                     DivergenceForm form) {
    if (target.dim() != psi.dim()) throw std::invalid_argument("fisher_divergence: dimension mismatch");
    const MomentParam p = natural_to_moment(psi);
    const MatrixXd thetas = draws.transform(p);
    const MatrixXd z = target.score_batch(thetas);
    VectorXd values;
    if (form == DivergenceForm::reduced) {
        values = kernels::parallel::squared_residuals(thetas, z, psi.vec());
    } else {
        const MatrixXd omega = psi.precision();
        MatrixXd centered = thetas;
        centered.rowwise() -= p.mean().transpose();
        const MatrixXd diff = z + centered * omega;
        values = diff.rowwise().squaredNorm();
    }
    const auto est = reduce_draws(values);
    return {est.mean(0), est.std_error(0)};
}

DivergenceEstimate fisher_divergence(const NaturalParam& psi, const TargetModel& target, const IntegratorConfig& cfg,
                                     DivergenceForm form) {
    cfg.validate(psi.dim());
    if (target.dim() != psi.dim()) throw std::invalid_argument("fisher_divergence: dimension mismatch");
    if (use_quadrature(cfg, psi.dim())) {
        return divergence_quadrature(psi, natural_to_moment(psi), target, cfg, form);
    }
    return fisher_divergence(psi, target, StandardDraws(cfg.seed, cfg.n_samples, psi.dim()), form);
}

// M_t --------------------------------------------------------------------------

MatrixXd assemble_Mt(const MomentParam& p) {
    const Index d = p.dim();
    const auto cols = jacobian_terms(d);
    const MatrixXd s = p.second_moment();
    const VectorXd& mu = p.mean();
    // E[term_a * term_b] for polynomial factors of degree <= 1
    const auto expect = [&](Index va, Index vb) {
        if (va < 0 && vb < 0) return 1.0;
        if (va < 0) return mu(vb);
        if (vb < 0) return mu(va);
        return s(va, vb);
    };
    const auto m = static_cast<Index>(cols.size());
    MatrixXd out = MatrixXd::Zero(m, m);
    for (Index a = 0; a < m; ++a) {
        for (Index b = a; b < m; ++b) {
            double acc = 0.0;
            for (const auto& ta : cols[static_cast<std::size_t>(a)]) {
                for (const auto& tb : cols[static_cast<std::size_t>(b)]) {
                    if (ta.row == tb.row) acc += ta.coef * tb.coef * expect(ta.var, tb.var);
                }
            }
            out(a, b) = out(b, a) = acc;
        }
    }
    return out;
}

MatrixXd assemble_Mt(const NaturalParam& psi) { return assemble_Mt(natural_to_moment(psi)); }

// v_t, generic ---------------------------------------------------------------------

namespace {

McEstimate vt_affine(const MomentParam& p, const AffineScore& aff) {
    const Index d = p.dim();
    const auto cols = jacobian_terms(d);
    const MatrixXd as = aff.matrix * p.second_moment();  // (A S)(r, q) = E[(A theta)_r theta_q]
    const VectorXd zbar = aff.matrix * p.mean() + aff.offset;
    const auto m = static_cast<Index>(cols.size());
    VectorXd v = VectorXd::Zero(m);
    for (Index a = 0; a < m; ++a) {
        for (const auto& t : cols[static_cast<std::size_t>(a)]) {
            // E[theta_var * z_row] or E[z_row]
            v(a) += t.coef * (t.var < 0 ? zbar(t.row) : as(t.row, t.var) + aff.offset(t.row) * p.mean()(t.var));
        }
    }
    return {v, VectorXd::Zero(m)};
}

McEstimate vt_quadrature(const MomentParam& p, const TargetModel& target, int n_nodes) {
    const double mu = p.mean()(0);
    const double s2 = p.cov()(0, 0);
    const auto z = [&](double theta) { return target.score(VectorXd::Constant(1, theta))(0); };
    VectorXd v(2);
    v(0) = gh_expectation([&](double t) { return 2.0 * t * z(t); }, mu, s2, n_nodes);
    v(1) = gh_expectation(z, mu, s2, n_nodes);
    return {v, VectorXd::Zero(2)};
}

}  // namespace

McEstimate assemble_vt_generic(const MomentParam& p, const TargetModel& target, const IntegratorConfig& cfg,
                               const StandardDraws* draws) {
    if (target.dim() != p.dim()) throw std::invalid_argument("assemble_vt_generic: dimension mismatch");
    if (const auto aff = target.affine_score()) return vt_affine(p, *aff);
    if (use_quadrature(cfg, p.dim())) return vt_quadrature(p, target, cfg.n_nodes);
    if (cfg.method == IntegrationMethod::taylor) {
        throw std::invalid_argument("Taylor expectations are only available for the logistic assembly");
    }
    if (draws == nullptr) throw std::invalid_argument("assemble_vt_generic: Monte Carlo requires draws");
    const MatrixXd thetas = draws->transform(p);
    const MatrixXd z = target.score_batch(thetas);
    return reduce_draws(kernels::parallel::jacobian_t_products(thetas, z));
}

McEstimate assemble_vt_generic(const NaturalParam& psi, const TargetModel& target, const IntegratorConfig& cfg) {
    cfg.validate(psi.dim());
    const MomentParam p = natural_to_moment(psi);
    if (use_quadrature(cfg, p.dim()) || target.affine_score()) return assemble_vt_generic(p, target, cfg, nullptr);
    const StandardDraws draws(cfg.seed, cfg.n_samples, p.dim());
    return assemble_vt_generic(p, target, cfg, &draws);
}

// v_t, logistic blocks ---------------------------------------------------------------

McEstimate assemble_vt_logistic(const MomentParam& p, const Dataset& data, LogisticMethod method,
                                const StandardDraws* draws) {
    const Index d = data.d();
    if (p.dim() != d) throw std::invalid_argument("assemble_vt_logistic: parameter layout does not match data");
    const Index n = data.n();
    const Index m = layout::param_dim(d);
    const auto slots = layout::slots(d);
    const VectorXd& mu = p.mean();
    const MatrixXd& sigma = p.cov();
    const double inv_tau2 = 1.0 / data.tau2;

    // deterministic parts: sum_i (y_i - 1) x_i and the prior terms
    const VectorXd ym1 = data.y.array() - 1.0;
    const VectorXd rx = data.x.transpose() * ym1;

    VectorXd v(m);
    VectorXd se = VectorXd::Zero(m);
    for (Index a = 0; a < m; ++a) {
        const auto [j, l] = slots[static_cast<std::size_t>(a)];
        if (l < 0) {
            v(a) = rx(j) - inv_tau2 * mu(j);
        } else {
            v(a) = rx(j) * mu(l) + rx(l) * mu(j) - 2.0 * (mu(j) * mu(l) + sigma(j, l)) * inv_tau2;
        }
    }

    // stochastic parts, with w(theta) = sum_i x_i / (1 + exp(x_i' theta)):
    //   quadratic slot (j, l): E[w_j theta_l + w_l theta_j]; linear slot j: E[w_j]
    if (method == LogisticMethod::taylor) {
        MatrixXd f(n, d);  // E[theta_j / (1 + exp(x_i' theta))]
        VectorXd g(n);     // E[1 / (1 + exp(x_i' theta))]
#pragma omp parallel for schedule(static)
        for (Index i = 0; i < n; ++i) {
            g(i) = taylor_expectation_sigmoid(i, p, data);
            for (Index j = 0; j < d; ++j) f(i, j) = taylor_expectation_fij(i, j, p, data);
        }
        const MatrixXd w = data.x.transpose() * f;  // w(j, l) = E[w_j theta_l]
        const VectorXd wbar = data.x.transpose() * g;
        for (Index a = 0; a < m; ++a) {
            const auto [j, l] = slots[static_cast<std::size_t>(a)];
            v(a) += l < 0 ? wbar(j) : w(j, l) + w(l, j);
        }
        return {v, se};
    }

    if (draws == nullptr) throw std::invalid_argument("assemble_vt_logistic: Monte Carlo requires draws");
    // Per-draw block integrand, with mu and mu mu' + Sigma replaced by theta and
    // theta theta'. Keeps the prior/likelihood cancellation within each draw.
    const MatrixXd thetas = draws->transform(p);
    const Index k = thetas.rows();
    MatrixXd values(k, m);
#pragma omp parallel for schedule(static)
    for (Index r = 0; r < k; ++r) {
        const VectorXd th = thetas.row(r).transpose();
        VectorXd w = rx;
        for (Index i = 0; i < n; ++i) w += logistic(-data.x.row(i).dot(th)) * data.x.row(i).transpose();
        w -= inv_tau2 * th;
        for (Index a = 0; a < m; ++a) {
            const auto [j, l] = slots[static_cast<std::size_t>(a)];
            values(r, a) = l < 0 ? w(j) : w(j) * th(l) + w(l) * th(j);
        }
    }
    return reduce_draws(values);
}

McEstimate assemble_vt_logistic(const NaturalParam& psi, const Dataset& data, LogisticMethod method,
                                const IntegratorConfig& cfg) {
    const MomentParam p = natural_to_moment(psi);
    if (method == LogisticMethod::taylor) return assemble_vt_logistic(p, data, method, nullptr);
    IntegratorConfig mc = cfg;
    mc.method = IntegrationMethod::monte_carlo;
    mc.validate(p.dim());
    const StandardDraws draws(cfg.seed, cfg.n_samples, p.dim());
    return assemble_vt_logistic(p, data, method, &draws);
}

// IRLS ---------------------------------------------------------------------------

NaturalParam irls_step(const NaturalParam& psi_t, const VectorXd& v, const MatrixXd& m, double rho, int iteration) {
    const Index size = psi_t.size();
    if (v.size() != size || m.rows() != size || m.cols() != size) {
        throw std::invalid_argument("irls_step: system does not match the parameter length");
    }
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("irls_step: rho must lie in (0, 1]");
    const double ridge = 1e-10 * (1.0 + m.diagonal().cwiseAbs().maxCoeff());
    MatrixXd reg = m;
    reg.diagonal().array() += ridge;
    const Eigen::LLT<MatrixXd> llt(reg);
    if (llt.info() != Eigen::Success) throw SolverFailure("least-squares system is singular", iteration);
    const VectorXd target = llt.solve(v);
    if (!target.allFinite()) throw SolverFailure("least-squares solution is not finite", iteration);
    return NaturalParam(rho * target + (1.0 - rho) * psi_t.vec());
}

FitReport fit(const TargetModel& target, const NaturalParam& init, const SolverConfig& cfg) {
    cfg.validate();
    const Index d = target.dim();
    if (init.dim() != d) throw std::invalid_argument("fit: initial parameter does not match target dimension");
    const auto started = std::chrono::steady_clock::now();

    const LogisticTarget* logistic = nullptr;
    if (cfg.assembly != Assembly::generic_mc) {
        logistic = dynamic_cast<const LogisticTarget*>(&target);
        if (logistic == nullptr) throw std::invalid_argument("logistic assembly requires a logistic target");
        IntegratorConfig mc = cfg.integrator;
        mc.method = IntegrationMethod::monte_carlo;
        mc.validate(d);
    } else {
        cfg.integrator.validate(d);
    }

    const bool quadrature = use_quadrature(cfg.integrator, d);
    // common random numbers for every Monte Carlo expectation of the run
    std::optional<StandardDraws> draws;
    if (!quadrature) draws.emplace(cfg.integrator.seed, cfg.integrator.n_samples, d);

    NaturalParam psi = init;
    MomentParam moment = natural_to_moment(init);
    FitReport report{psi, moment, 0, false, {}, 0.0};

    for (int t = 1; t <= cfg.max_iter; ++t) {
        const MatrixXd m = assemble_Mt(moment);
        McEstimate v;
        switch (cfg.assembly) {
            case Assembly::generic_mc:
                v = assemble_vt_generic(moment, target, cfg.integrator, draws ? &*draws : nullptr);
                break;
            case Assembly::logistic_taylor:
                v = assemble_vt_logistic(moment, logistic->data(), LogisticMethod::taylor, nullptr);
                break;
            case Assembly::logistic_mc:
                v = assemble_vt_logistic(moment, logistic->data(), LogisticMethod::mc, &*draws);
                break;
        }

        double rho = cfg.rho;
        std::optional<NaturalParam> next;
        std::optional<MomentParam> next_moment;
        for (int halving = 0; halving <= 10; ++halving, rho *= 0.5) {
            NaturalParam candidate = irls_step(psi, v.mean, m, rho, t);
            try {
                next_moment.emplace(natural_to_moment(candidate));
                next.emplace(std::move(candidate));
                break;
            } catch (const PdViolation&) {
            }
        }
        if (!next) throw SolverFailure("iterate lost positive definiteness after 10 step halvings", t);

        TraceEntry entry;
        entry.iter = t;
        entry.delta_inf = (next->vec() - psi.vec()).cwiseAbs().maxCoeff();
        entry.rho = rho;
        entry.psi = next->vec();
        if (quadrature) {
            entry.objective = fisher_divergence(*next, target, cfg.integrator).value;
        } else if (t % 10 == 0) {
            entry.objective = fisher_divergence(*next, target, *draws).value;
        }
        report.trace.push_back(std::move(entry));

        psi = std::move(*next);
        moment = std::move(*next_moment);
        report.iterations = t;
        if (report.trace.back().delta_inf <= cfg.tol) {
            report.converged = true;
            break;
        }
    }

    report.psi_star = psi;
    report.moment = moment;
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

double normal_mean_update(double psi_t, double sigma2, const TargetModel& target, int n_nodes) {
    if (target.dim() != 1) throw std::invalid_argument("normal_mean_update requires a 1D target");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("normal_mean_update: sigma2 must be positive");
    const auto z = [&](double theta) { return target.score(VectorXd::Constant(1, theta))(0); };
    return psi_t + sigma2 * gh_expectation(z, psi_t, sigma2, n_nodes);
}

NormalMeanFit normal_mean_fit(const TargetModel& target, double sigma2, double init, double tol, int max_iter) {
    NormalMeanFit out{init, 0, false};
    for (int t = 1; t <= max_iter; ++t) {
        const double next = normal_mean_update(out.mean, sigma2, target);
        const double delta = std::abs(next - out.mean);
        out.mean = next;
        out.iterations = t;
        if (delta <= tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

NaturalParam default_init(const TargetModel& target) {
    const Index d = target.dim();
    if (const auto* logistic = dynamic_cast<const LogisticTarget*>(&target)) {
        return moment_to_natural(MomentParam(VectorXd::Zero(d), logistic->data().tau2 * MatrixXd::Identity(d, d)));
    }
    if (d == 1) {
        double best = -5.0;
        double best_value = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 10000; ++k) {
            const double theta = -5.0 + 1e-3 * k;
            const double value = target.log_unnorm(VectorXd::Constant(1, theta));
            if (value > best_value) {
                best_value = value;
                best = theta;
            }
        }
        return moment_to_natural(MomentParam(VectorXd::Constant(1, best), MatrixXd::Identity(1, 1)));
    }
    return moment_to_natural(MomentParam(VectorXd::Zero(d), MatrixXd::Identity(d, d)));
}

}  // namespace fdvi
