#include "fdvi/bench_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include <boost/math/distributions/chi_squared.hpp>

#include "fdvi/io.hpp"
#include "fdvi/kernels.hpp"
#include "fdvi/rng.hpp"

namespace fdvi {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string to_string(Covariate c) { return c == Covariate::isotropic ? "isotropic" : "ar1"; }

Covariate parse_covariate(const std::string& s) {
    if (s == "isotropic") return Covariate::isotropic;
    if (s == "ar1") return Covariate::ar1;
    throw std::invalid_argument("unknown covariate model '" + s + "'");
}

std::string to_string(Method m) {
    switch (m) {
        case Method::fisher: return "fisher";
        case Method::jj: return "jj";
        case Method::dsvi: return "dsvi";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    if (s == "fisher") return Method::fisher;
    if (s == "jj") return Method::jj;
    if (s == "dsvi") return Method::dsvi;
    throw std::invalid_argument("unknown method '" + s + "'");
}

// Data generation -------------------------------------------------------------------

void GenConfig::validate() const {
    if (n < 1 || d < 1) throw std::invalid_argument("n and d must be positive");
    if (!(covariate_variance > 0.0) || !(theta_variance > 0.0) || !(tau2 > 0.0)) {
        throw std::invalid_argument("variances must be positive");
    }
    if (!(ar_rho > -1.0 && ar_rho < 1.0)) throw std::invalid_argument("ar_rho must lie in (-1, 1)");
}

GeneratedData generate_dataset(const GenConfig& cfg) {
    cfg.validate();
    RngStream rng(cfg.seed);
    GeneratedData out;
    out.theta_true = std::sqrt(cfg.theta_variance) * rng.normal_vector(cfg.d);
    out.data.tau2 = cfg.tau2;
    out.data.x.resize(cfg.n, cfg.d);
    out.data.y.resize(cfg.n);
    const double scale = std::sqrt(cfg.covariate_variance);
    const double innovation = std::sqrt(1.0 - cfg.ar_rho * cfg.ar_rho);
    for (Index i = 0; i < cfg.n; ++i) {
        double prev = 0.0;
        for (Index j = 0; j < cfg.d; ++j) {
            const double e = rng.normal();
            double value = e;
            if (cfg.covariate == Covariate::ar1) {
                value = j == 0 ? e : cfg.ar_rho * prev + innovation * e;
                prev = value;
            }
            out.data.x(i, j) = scale * value;
        }
        const double p = logistic(out.data.x.row(i).dot(out.theta_true));
        out.data.y(i) = rng.uniform() < p ? 1.0 : 0.0;
    }
    return out;
}

// Metrics -----------------------------------------------------------------------------

ErrorMetrics error_metrics(const MomentParam& fit, const VectorXd& ref_mean, const MatrixXd& ref_cov) {
    if (ref_mean.size() != fit.dim() || ref_cov.rows() != fit.dim() || ref_cov.cols() != fit.dim()) {
        throw std::invalid_argument("error_metrics: dimension mismatch");
    }
    return {(fit.mean() - ref_mean).norm(), (fit.cov() - ref_cov).norm()};
}

ErrorMetrics error_metrics(const MomentParam& fit, const McmcResult& ref) {
    return error_metrics(fit, ref.mean, ref.cov);
}

std::vector<double> default_coverage_grid() {
    std::vector<double> grid;
    for (int k = 1; k <= 99; ++k) grid.push_back(k / 100.0);
    return grid;
}

double chi_square_quantile(double c, Index dof) {
    const boost::math::chi_squared_distribution<double> dist(static_cast<double>(dof));
    return boost::math::quantile(dist, c);
}

CoverageCurve coverage_curve(const MomentParam& fit, const MatrixXd& ref_samples, const std::vector<double>& grid) {
    if (ref_samples.cols() != fit.dim()) throw std::invalid_argument("coverage_curve: dimension mismatch");
    if (ref_samples.rows() == 0) throw std::invalid_argument("coverage_curve: no reference samples");
    VectorXd dist = kernels::parallel::mahalanobis_sq(ref_samples, fit.mean(), fit.chol());
    std::sort(dist.data(), dist.data() + dist.size());
    CoverageCurve curve;
    curve.grid = grid;
    double dev = 0.0;
    for (double c : grid) {
        if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("coverage levels must lie in (0, 1)");
        const double radius = chi_square_quantile(c, fit.dim());
        const auto inside = std::upper_bound(dist.data(), dist.data() + dist.size(), radius) - dist.data();
        const double prob = static_cast<double>(inside) / static_cast<double>(dist.size());
        curve.prob.push_back(prob);
        dev += std::abs(prob - c);
    }
    curve.mean_abs_dev = grid.empty() ? 0.0 : dev / static_cast<double>(grid.size());
    return curve;
}

CoverageCurve coverage_curve(const MomentParam& fit, const McmcResult& ref, const std::vector<double>& grid) {
    return coverage_curve(fit, ref.samples, grid);
}

// Benchmark ---------------------------------------------------------------------------

std::uint64_t BenchmarkSpec::replicate_seed(int r) const {
    if (!seeds.empty()) {
        if (r < 0 || static_cast<std::size_t>(r) >= seeds.size()) throw std::out_of_range("replicate seed index");
        return seeds[static_cast<std::size_t>(r)];
    }
    return derive_seed(base_seed, static_cast<std::uint64_t>(r));
}

ReplicateCell run_reference(const BenchmarkSpec& spec, Index n, Covariate covariate, std::uint64_t seed) {
    GenConfig gen = spec.gen;
    gen.n = n;
    gen.d = spec.d;
    gen.covariate = covariate;
    gen.seed = derive_seed(seed, 1);
    auto data = generate_dataset(gen);
    McmcConfig mcmc = spec.mcmc;
    mcmc.seed = derive_seed(seed, 2);
    const LogisticTarget target(data.data);
    auto reference = metropolis_hastings(target, mcmc);
    return {std::move(data), std::move(reference)};
}

MomentParam run_method(const BenchmarkSpec& spec, Method method, const Dataset& data, std::uint64_t seed) {
    switch (method) {
        case Method::fisher: {
            SolverConfig cfg = spec.fisher;
            cfg.integrator.seed = derive_seed(seed, 3);
            const LogisticTarget target(data);
            auto report = fit(target, default_init(target), cfg);
            if (!report.converged) {
                throw SolverFailure("fisher fit did not converge", report.iterations);
            }
            return report.moment;
        }
        case Method::jj: return jj_fit(data).moment;
        case Method::dsvi: {
            DsviConfig cfg = spec.dsvi;
            cfg.seed = derive_seed(seed, 4);
            return dsvi_fit(data, cfg);
        }
    }
    throw std::invalid_argument("unknown method");
}

BenchmarkReport run_benchmark(const BenchmarkSpec& spec) {
    if (spec.replicates < 1) throw std::invalid_argument("replicates must be at least 1");
    if (!spec.seeds.empty() && static_cast<int>(spec.seeds.size()) < spec.replicates) {
        throw std::invalid_argument("fewer seeds than replicates");
    }
    if (spec.methods.empty()) throw std::invalid_argument("no methods selected");

    struct Cell {
        Index n;
        Covariate covariate;
        int replicate;
    };
    std::vector<Cell> cells;
    for (Index n : spec.n_values) {
        for (Covariate c : spec.covariates) {
            for (int r = 0; r < spec.replicates; ++r) cells.push_back({n, c, r});
        }
    }

    const auto n_methods = spec.methods.size();
    std::vector<ReplicateReference> refs(cells.size());
    std::vector<ReplicateRow> rows(cells.size() * n_methods);

#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const Cell& cell = cells[k];
        const std::uint64_t seed = spec.replicate_seed(cell.replicate);
        auto& ref = refs[k];
        ref = {cell.n, cell.covariate, cell.replicate, seed, false, {}, 0.0, 0.0};
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            auto& row = rows[k * n_methods + mi];
            row.n = cell.n;
            row.covariate = cell.covariate;
            row.replicate = cell.replicate;
            row.seed = seed;
            row.method = spec.methods[mi];
        }
        std::optional<ReplicateCell> base;
        const auto ref_start = std::chrono::steady_clock::now();
        try {
            base.emplace(run_reference(spec, cell.n, cell.covariate, seed));
            ref.ok = true;
            ref.acceptance_rate = base->reference.acceptance_rate;
        } catch (const std::exception& e) {
            ref.error = e.what();
        }
        ref.wall_time_s = seconds_since(ref_start);
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            auto& row = rows[k * n_methods + mi];
            if (!base) {
                row.error = "reference failed: " + ref.error;
                continue;
            }
            const auto start = std::chrono::steady_clock::now();
            try {
                auto moment = run_method(spec, row.method, base->data.data, seed);
                row.wall_time_s = seconds_since(start);
                row.metrics = error_metrics(moment, base->reference);
                row.coverage = coverage_curve(moment, base->reference);
                row.coverage_mad = row.coverage.mean_abs_dev;
                row.fit.emplace(std::move(moment));
                row.ok = true;
            } catch (const std::exception& e) {
                row.wall_time_s = seconds_since(start);
                row.error = e.what();
            }
        }
    }

    BenchmarkReport report;
    report.references = std::move(refs);
    report.rows = std::move(rows);
    const auto key = [](const ReplicateRow& r) {
        return std::make_tuple(r.n, static_cast<int>(r.covariate), r.replicate, static_cast<int>(r.method));
    };
    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [&](const ReplicateRow& a, const ReplicateRow& b) { return key(a) < key(b); });

    for (Index n : spec.n_values) {
        for (Covariate c : spec.covariates) {
            for (Method m : spec.methods) {
                MethodSummary s{n, c, m};
                for (const auto& row : report.rows) {
                    if (row.n != n || row.covariate != c || row.method != m || !row.ok) continue;
                    ++s.n_ok;
                    s.mean_err += row.metrics.mean_err;
                    s.cov_err += row.metrics.cov_err;
                    s.coverage_mad += row.coverage_mad;
                    s.wall_time_s += row.wall_time_s;
                }
                if (s.n_ok > 0) {
                    s.mean_err /= s.n_ok;
                    s.cov_err /= s.n_ok;
                    s.coverage_mad /= s.n_ok;
                    s.wall_time_s /= s.n_ok;
                }
                report.summary.push_back(s);
            }
        }
    }
    return report;
}

nlohmann::json BenchmarkReport::to_json() const {
    nlohmann::json j;
    j["covariate_model"] =
        "isotropic: x_i ~ N(0, v I); ar1: stationary unit-variance AR(1) across the coordinates of each x_i, "
        "scaled by sqrt(v)";
    auto summ = nlohmann::json::array();
    for (const auto& s : summary) {
        summ.push_back({{"n", s.n},
                        {"covariate", to_string(s.covariate)},
                        {"method", to_string(s.method)},
                        {"n_ok", s.n_ok},
                        {"mean_err", s.mean_err},
                        {"cov_err", s.cov_err},
                        {"coverage_mad", s.coverage_mad}});
    }
    j["summary"] = std::move(summ);
    auto reps = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json row{{"n", r.n},
                           {"covariate", to_string(r.covariate)},
                           {"replicate", r.replicate},
                           {"seed", r.seed},
                           {"method", to_string(r.method)},
                           {"ok", r.ok}};
        if (r.ok) {
            row["mean_err"] = r.metrics.mean_err;
            row["cov_err"] = r.metrics.cov_err;
            row["coverage_mad"] = r.coverage_mad;
            row["mu"] = io::to_json(r.fit->mean());
            row["sigma"] = io::to_json_row_major(r.fit->cov());
        } else {
            row["error"] = r.error;
        }
        reps.push_back(std::move(row));
    }
    j["replicates"] = std::move(reps);
    auto refs = nlohmann::json::array();
    for (const auto& r : references) {
        nlohmann::json row{{"n", r.n},
                           {"covariate", to_string(r.covariate)},
                           {"replicate", r.replicate},
                           {"seed", r.seed},
                           {"ok", r.ok},
                           {"acceptance_rate", r.acceptance_rate}};
        if (!r.ok) row["error"] = r.error;
        refs.push_back(std::move(row));
    }
    j["references"] = std::move(refs);
    return j;
}

void BenchmarkReport::write(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    using io::format_double;

    io::TextRows rep_rows;
    for (const auto& r : rows) {
        rep_rows.push_back({std::to_string(r.n), to_string(r.covariate), std::to_string(r.replicate),
                            std::to_string(r.seed), to_string(r.method), r.ok ? "ok" : "failed",
                            r.ok ? format_double(r.metrics.mean_err) : "nan",
                            r.ok ? format_double(r.metrics.cov_err) : "nan",
                            r.ok ? format_double(r.coverage_mad) : "nan"});
    }
    io::write_table((base / "replicates.csv").string(),
                    {"n", "covariate", "replicate", "seed", "method", "status", "mean_err", "cov_err", "coverage_mad"},
                    rep_rows);

    io::TextRows sum_rows;
    for (const auto& s : summary) {
        sum_rows.push_back({std::to_string(s.n), to_string(s.covariate), to_string(s.method), std::to_string(s.n_ok),
                            format_double(s.mean_err), format_double(s.cov_err), format_double(s.coverage_mad)});
    }
    io::write_table((base / "summary.csv").string(),
                    {"n", "covariate", "method", "n_ok", "mean_err", "cov_err", "coverage_mad"}, sum_rows);

    io::TextRows cov_rows;
    for (const auto& r : rows) {
        if (!r.ok) continue;
        for (std::size_t k = 0; k < r.coverage.grid.size(); ++k) {
            cov_rows.push_back({std::to_string(r.n), to_string(r.covariate), std::to_string(r.replicate),
                                to_string(r.method), format_double(r.coverage.grid[k]),
                                format_double(r.coverage.prob[k])});
        }
    }
    io::write_table((base / "coverage.csv").string(), {"n", "covariate", "replicate", "method", "c", "prob"},
                    cov_rows);

    io::write_json((base / "report.json").string(), to_json());

    io::TextRows time_rows;
    for (const auto& r : references) {
        time_rows.push_back({std::to_string(r.n), to_string(r.covariate), std::to_string(r.replicate), "mcmc",
                             format_double(r.wall_time_s)});
    }
    for (const auto& r : rows) {
        time_rows.push_back({std::to_string(r.n), to_string(r.covariate), std::to_string(r.replicate),
                             to_string(r.method), format_double(r.wall_time_s)});
    }
    io::write_table((base / "timing.csv").string(), {"n", "covariate", "replicate", "method", "wall_time_s"},
                    time_rows);
}

// Contours ------------------------------------------------------------------------------

ContourGrid pair_contours(const McmcResult& ref, const std::vector<std::pair<std::string, MomentParam>>& fits,
                          Index i, Index j, int grid_size) {
    const Index d = ref.samples.cols();
    if (i < 0 || j < 0 || i >= d || j >= d || i == j) throw std::invalid_argument("pair_contours: bad pair");
    if (grid_size < 2) throw std::invalid_argument("pair_contours: grid too small");

    // thin to at most 20000 points for the kernel density estimate
    const Index stride = std::max<Index>(1, ref.samples.rows() / 20000);
    const Index k = (ref.samples.rows() + stride - 1) / stride;
    MatrixXd pts(k, 2);
    for (Index r = 0; r < k; ++r) {
        pts(r, 0) = ref.samples(r * stride, i);
        pts(r, 1) = ref.samples(r * stride, j);
    }
    VectorXd mean;
    MatrixXd cov;
    sample_moments(pts, mean, cov);
    // Scott's rule bandwidth matrix H = n^{-1/3} Cov for d = 2
    const MatrixXd bw = std::pow(static_cast<double>(k), -1.0 / 3.0) * cov;
    const MatrixXd bw_chol = checked_cholesky(bw, "kernel bandwidth");
    const double bw_norm = 1.0 / (2.0 * std::numbers::pi * bw_chol.diagonal().prod());

    const VectorXd sd = cov.diagonal().cwiseSqrt();
    const double lo_x = mean(0) - 4.0 * sd(0), hi_x = mean(0) + 4.0 * sd(0);
    const double lo_y = mean(1) - 4.0 * sd(1), hi_y = mean(1) + 4.0 * sd(1);

    ContourGrid out;
    out.header = {"x", "y", "mcmc_kde"};
    for (const auto& f : fits) out.header.push_back(f.first);
    const Index cells = static_cast<Index>(grid_size) * grid_size;
    out.values.resize(cells, static_cast<Index>(out.header.size()));

    std::vector<MatrixXd> marg_chol;
    std::vector<VectorXd> marg_mean;
    for (const auto& f : fits) {
        MatrixXd c(2, 2);
        c << f.second.cov()(i, i), f.second.cov()(i, j), f.second.cov()(j, i), f.second.cov()(j, j);
        marg_chol.push_back(checked_cholesky(c, "marginal covariance"));
        marg_mean.push_back((VectorXd(2) << f.second.mean()(i), f.second.mean()(j)).finished());
    }

#pragma omp parallel for schedule(static)
    for (Index c = 0; c < cells; ++c) {
        const Index a = c / grid_size;
        const Index b = c % grid_size;
        const double x = lo_x + (hi_x - lo_x) * static_cast<double>(a) / (grid_size - 1);
        const double y = lo_y + (hi_y - lo_y) * static_cast<double>(b) / (grid_size - 1);
        out.values(c, 0) = x;
        out.values(c, 1) = y;
        MatrixXd one(1, 2);
        one << x, y;
        // KDE: average of Gaussian kernels centred at the thinned samples
        std::vector<double> terms(static_cast<std::size_t>(k));
        for (Index r = 0; r < k; ++r) {
            MatrixXd diff(1, 2);
            diff << x - pts(r, 0), y - pts(r, 1);
            const double m2 = kernels::serial::mahalanobis_sq(diff, VectorXd::Zero(2), bw_chol)(0);
            terms[static_cast<std::size_t>(r)] = std::exp(-0.5 * m2);
        }
        out.values(c, 2) = bw_norm * kernels::pairwise_sum(terms) / static_cast<double>(k);
        for (std::size_t f = 0; f < fits.size(); ++f) {
            const double m2 = kernels::serial::mahalanobis_sq(one, marg_mean[f], marg_chol[f])(0);
            const double norm = 1.0 / (2.0 * std::numbers::pi * marg_chol[f].diagonal().prod());
            out.values(c, 3 + static_cast<Index>(f)) = norm * std::exp(-0.5 * m2);
        }
    }
    return out;
}

// One-dimensional comparisons ----------------------------------------------------------------

Fit1DComparison fit1d_compare(const TargetModel& target, double grid_lo, double grid_hi, double grid_step) {
    if (target.dim() != 1) throw std::invalid_argument("fit1d_compare requires a 1D target");
    if (!(grid_hi > grid_lo) || !(grid_step > 0.0)) throw std::invalid_argument("fit1d_compare: bad grid");

    const Normal1D kl = kl_fit_1d(target);

    SolverConfig cfg;
    cfg.integrator.method = IntegrationMethod::quadrature;
    cfg.integrator.n_nodes = 128;
    cfg.tol = 1e-10;
    cfg.max_iter = 2000;
    FitReport fisher = fit(target, default_init(target), cfg);
    const double f_mu = fisher.moment.mean()(0);
    const double f_sigma = std::sqrt(fisher.moment.cov()(0, 0));

    const auto points = static_cast<Index>(std::floor((grid_hi - grid_lo) / grid_step + 0.5)) + 1;
    MatrixXd grid(points, 4);
    double max_log = -std::numeric_limits<double>::infinity();
    VectorXd logp(points);
    for (Index k = 0; k < points; ++k) {
        const double theta = grid_lo + grid_step * static_cast<double>(k);
        grid(k, 0) = theta;
        logp(k) = target.log_unnorm(VectorXd::Constant(1, theta));
        max_log = std::max(max_log, logp(k));
    }
    // trapezoid normalization
    VectorXd dens = (logp.array() - max_log).exp();
    const double area = grid_step * (dens.sum() - 0.5 * (dens(0) + dens(points - 1)));
    dens /= area;
    double mean = 0.0;
    for (Index k = 0; k < points; ++k) {
        const double w = (k == 0 || k == points - 1) ? 0.5 : 1.0;
        mean += w * grid_step * grid(k, 0) * dens(k);
    }
    double var = 0.0;
    for (Index k = 0; k < points; ++k) {
        const double w = (k == 0 || k == points - 1) ? 0.5 : 1.0;
        var += w * grid_step * (grid(k, 0) - mean) * (grid(k, 0) - mean) * dens(k);
    }
    const auto normal_pdf = [](double x, double mu, double sigma) {
        const double z = (x - mu) / sigma;
        return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    };
    for (Index k = 0; k < points; ++k) {
        grid(k, 1) = dens(k);
        grid(k, 2) = normal_pdf(grid(k, 0), kl.mu, kl.sigma);
        grid(k, 3) = normal_pdf(grid(k, 0), f_mu, f_sigma);
    }

    return Fit1DComparison{{{"kl", kl.mu, kl.sigma}, {"fisher", f_mu, f_sigma}}, std::move(grid), mean, var,
                           std::move(fisher)};
}

void Fit1DComparison::write(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    io::TextRows out;
    for (const auto& r : rows) out.push_back({r.method, io::format_double(r.mu), io::format_double(r.sigma)});
    io::write_table((base / "fit1d.csv").string(), {"method", "mu", "sigma"}, out);
    io::write_csv((base / "density_grid.csv").string(), {"theta", "target", "kl", "fisher"}, density_grid);
}

}  // namespace fdvi
