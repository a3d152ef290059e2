// Command-line front end. Exit codes: 0 success, 2 invalid arguments,
// 3 numerical failure (JSON diagnostics on stderr).

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fdvi/baselines.hpp"
#include "fdvi/bench_harness.hpp"
#include "fdvi/error.hpp"
#include "fdvi/fisher_irls.hpp"
#include "fdvi/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

struct Common {
    std::uint64_t seed = 1;
    std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "Random seed");
    cmd->add_option("--out", c.out, "Output directory");
}

fs::path out_dir(const Common& c) {
    fs::create_directories(c.out);
    return fs::path(c.out);
}

json moment_json(const fdvi::MomentParam& m) {
    return {{"mu", fdvi::io::to_json(m.mean())}, {"sigma", fdvi::io::to_json_row_major(m.cov())}};
}

// gen ---------------------------------------------------------------------------

struct GenArgs {
    Common common;
    fdvi::GenConfig cfg;
    std::string covariate = "isotropic";
};

void run_gen(const GenArgs& a) {
    auto cfg = a.cfg;
    cfg.covariate = fdvi::parse_covariate(a.covariate);
    cfg.seed = a.common.seed;
    const auto gen = fdvi::generate_dataset(cfg);
    const auto dir = out_dir(a.common);
    gen.data.save_csv((dir / "data.csv").string());
    json meta{{"n", cfg.n},
              {"d", cfg.d},
              {"covariate", a.covariate},
              {"covariate_variance", cfg.covariate_variance},
              {"ar_rho", cfg.ar_rho},
              {"theta_variance", cfg.theta_variance},
              {"tau2", cfg.tau2},
              {"seed", cfg.seed},
              {"theta_true", fdvi::io::to_json(gen.theta_true)}};
    fdvi::io::write_json((dir / "data.json").string(), meta);
    std::cout << meta.dump(2) << '\n';
}

// fit1d -------------------------------------------------------------------------

struct Fit1DArgs {
    Common common;
    std::string target = "student-t";
    double nu = 1.0;
    double w = 0.75;
    double mu2 = 2.5;
    double alpha = 6.0;
};

void run_fit1d(const Fit1DArgs& a) {
    fdvi::Target1D t;
    if (a.target == "student-t") {
        if (!(a.nu > 0.0)) throw std::invalid_argument("--nu must be positive");
        t = fdvi::StudentT{a.nu};
    } else if (a.target == "mixture") {
        if (!(a.w > 0.0 && a.w <= 1.0)) throw std::invalid_argument("--w must lie in (0, 1]");
        t = fdvi::NormalMixture{a.w, 0.0, a.mu2};
    } else {
        t = fdvi::SkewNormal{a.alpha};
    }
    const fdvi::Target1DModel model(t);
    const auto cmp = fdvi::fit1d_compare(model);
    const auto dir = out_dir(a.common);
    cmp.write(dir.string());
    fdvi::io::write_json((dir / "fisher_report.json").string(), cmp.fisher_report.to_json());
    json summary{{"target", fdvi::describe(t)},
                 {"target_mean", cmp.target_mean},
                 {"target_var", cmp.target_var},
                 {"fits", json::array()}};
    for (const auto& r : cmp.rows) summary["fits"].push_back({{"method", r.method}, {"mu", r.mu}, {"sigma", r.sigma}});
    fdvi::io::write_json((dir / "fit1d.json").string(), summary);
    std::cout << summary.dump(2) << '\n';
}

// fit-logistic ------------------------------------------------------------------

struct FitLogisticArgs {
    Common common;
    std::string data;
    double tau2 = 5.0;
    std::string method = "fisher";
    std::string assembly = "taylor";
    fdvi::SolverConfig solver{};
    int n_samples = 2000;
    int dsvi_steps = 20000;
    double dsvi_step_size = 1e-2;
};

void run_fit_logistic(const FitLogisticArgs& a) {
    const auto data = fdvi::Dataset::load_csv(a.data, a.tau2);
    const auto method = fdvi::parse_method(a.method);
    const auto dir = out_dir(a.common);
    json out;
    switch (method) {
        case fdvi::Method::fisher: {
            auto cfg = a.solver;
            cfg.assembly = a.assembly == "mc" ? fdvi::Assembly::logistic_mc : fdvi::Assembly::logistic_taylor;
            cfg.integrator.n_samples = a.n_samples;
            cfg.integrator.seed = a.common.seed;
            const fdvi::LogisticTarget target(data);
            const auto report = fdvi::fit(target, fdvi::default_init(target), cfg);
            out = report.to_json();
            break;
        }
        case fdvi::Method::jj: {
            const auto r = fdvi::jj_fit(data);
            out = moment_json(r.moment);
            out["sweeps"] = r.sweeps;
            out["converged"] = r.converged;
            break;
        }
        case fdvi::Method::dsvi: {
            const auto m = fdvi::dsvi_fit(data, {a.dsvi_steps, a.dsvi_step_size, a.common.seed});
            out = moment_json(m);
            break;
        }
    }
    out["method"] = a.method;
    fdvi::io::write_json((dir / "fit.json").string(), out);
    std::cout << out.dump(2) << '\n';
}

// mcmc --------------------------------------------------------------------------

struct McmcArgs {
    Common common;
    std::string data;
    double tau2 = 5.0;
    int iters = 100000;
    int burn_in = -1;  // iters / 5 when unset
    double proposal_scale = 0.0;
};

void run_mcmc(const McmcArgs& a) {
    const auto data = fdvi::Dataset::load_csv(a.data, a.tau2);
    fdvi::McmcConfig cfg;
    cfg.n_iter = a.iters;
    cfg.burn_in = a.burn_in < 0 ? a.iters / 5 : a.burn_in;
    cfg.seed = a.common.seed;
    if (a.proposal_scale > 0.0) cfg.proposal_scale = a.proposal_scale;
    const fdvi::LogisticTarget target(data);
    const auto result = fdvi::metropolis_hastings(target, cfg);
    const auto dir = out_dir(a.common);
    result.save_samples_csv((dir / "samples.csv").string());
    const auto summary = result.summary_json();
    fdvi::io::write_json((dir / "mcmc.json").string(), summary);
    std::cout << summary.dump(2) << '\n';
}

// bench -------------------------------------------------------------------------

struct BenchArgs {
    Common common;
    std::vector<long> n_values{200};
    std::vector<std::string> covariates{"isotropic"};
    std::vector<std::string> methods{"fisher", "jj", "dsvi"};
    int replicates = 10;
    std::vector<std::uint64_t> seeds;
    int mcmc_iters = 100000;
    int mcmc_burn_in = -1;  // mcmc_iters / 5 when unset
    std::vector<int> contour_pair;
};

void run_bench(const BenchArgs& a) {
    fdvi::BenchmarkSpec spec;
    spec.n_values.assign(a.n_values.begin(), a.n_values.end());
    spec.covariates.clear();
    for (const auto& c : a.covariates) spec.covariates.push_back(fdvi::parse_covariate(c));
    spec.methods.clear();
    for (const auto& m : a.methods) spec.methods.push_back(fdvi::parse_method(m));
    spec.replicates = a.replicates;
    spec.seeds = a.seeds;
    spec.base_seed = a.common.seed;
    spec.mcmc.n_iter = a.mcmc_iters;
    spec.mcmc.burn_in = a.mcmc_burn_in < 0 ? a.mcmc_iters / 5 : a.mcmc_burn_in;
    spec.mcmc.validate();

    const auto report = fdvi::run_benchmark(spec);
    const auto dir = out_dir(a.common);
    report.write(dir.string());

    if (!a.contour_pair.empty()) {
        if (a.contour_pair.size() != 2) throw std::invalid_argument("--contour-pair takes two 1-based indices");
        const auto i = static_cast<fdvi::Index>(a.contour_pair[0] - 1);
        const auto j = static_cast<fdvi::Index>(a.contour_pair[1] - 1);
        // contours for replicate 0 of every (n, covariate) cell
        for (auto n : spec.n_values) {
            for (auto cov : spec.covariates) {
                const auto seed = spec.replicate_seed(0);
                const auto cell = fdvi::run_reference(spec, n, cov, seed);
                std::vector<std::pair<std::string, fdvi::MomentParam>> fits;
                for (const auto& row : report.rows) {
                    if (row.n == n && row.covariate == cov && row.replicate == 0 && row.ok) {
                        fits.emplace_back(fdvi::to_string(row.method), *row.fit);
                    }
                }
                const auto grid = fdvi::pair_contours(cell.reference, fits, i, j);
                const auto name = "contour_n" + std::to_string(n) + "_" + fdvi::to_string(cov) + "_" +
                                  std::to_string(i + 1) + "_" + std::to_string(j + 1) + ".csv";
                fdvi::io::write_csv((dir / name).string(), grid.header, grid.values);
            }
        }
    }

    const auto j = report.to_json();
    std::cout << j["summary"].dump(2) << '\n';
}

// coverage ----------------------------------------------------------------------

struct CoverageArgs {
    Common common;
    std::string fit;
    std::string samples;
};

void run_coverage(const CoverageArgs& a) {
    const auto moment = fdvi::moment_from_json(fdvi::io::read_json(a.fit));
    const auto table = fdvi::io::read_csv(a.samples);
    const auto curve = fdvi::coverage_curve(moment, table.values);
    const auto dir = out_dir(a.common);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(curve.grid.size()), 2);
    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        values(static_cast<Eigen::Index>(k), 0) = curve.grid[k];
        values(static_cast<Eigen::Index>(k), 1) = curve.prob[k];
    }
    fdvi::io::write_csv((dir / "coverage.csv").string(), {"c", "prob"}, values);
    json summary{{"mean_abs_dev", curve.mean_abs_dev}, {"n_samples", table.values.rows()}};
    fdvi::io::write_json((dir / "coverage.json").string(), summary);
    std::cout << summary.dump(2) << '\n';
}

void report_numerical(const std::exception& e, const char* kind) {
    json diag{{"error", kind}, {"message", e.what()}};
    if (const auto* pd = dynamic_cast<const fdvi::PdViolation*>(&e)) diag["leading_minor"] = pd->minor();
    if (const auto* ie = dynamic_cast<const fdvi::IntegrationError*>(&e)) diag["location"] = ie->location();
    if (const auto* sf = dynamic_cast<const fdvi::SolverFailure*>(&e)) diag["iteration"] = sf->iteration();
    std::cerr << diag.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian variational approximation by Fisher-divergence IRLS"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a logistic-regression dataset");
    add_common(gen_cmd, gen.common);
    gen_cmd->add_option("--n", gen.cfg.n, "Observations")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--d", gen.cfg.d, "Covariates")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--covariate", gen.covariate)->check(CLI::IsMember({"isotropic", "ar1"}));
    gen_cmd->add_option("--covariate-variance", gen.cfg.covariate_variance);
    gen_cmd->add_option("--ar-rho", gen.cfg.ar_rho);
    gen_cmd->add_option("--theta-variance", gen.cfg.theta_variance);
    gen_cmd->add_option("--tau2", gen.cfg.tau2);

    Fit1DArgs fit1d;
    auto* fit1d_cmd = app.add_subcommand("fit1d", "Compare KL and Fisher normal fits to a 1D density");
    add_common(fit1d_cmd, fit1d.common);
    fit1d_cmd->add_option("--target", fit1d.target)->check(CLI::IsMember({"student-t", "mixture", "skew"}));
    fit1d_cmd->add_option("--nu", fit1d.nu, "Student-t degrees of freedom");
    fit1d_cmd->add_option("--w", fit1d.w, "Mixture weight of N(0, 1)");
    fit1d_cmd->add_option("--mu2", fit1d.mu2, "Mean of the second mixture component");
    fit1d_cmd->add_option("--alpha", fit1d.alpha, "Skew normal shape");

    FitLogisticArgs fl;
    auto* fl_cmd = app.add_subcommand("fit-logistic", "Fit a Gaussian approximation to a logistic posterior");
    add_common(fl_cmd, fl.common);
    fl_cmd->add_option("--data", fl.data, "Dataset CSV (y,x1,...,xd)")->required()->check(CLI::ExistingFile);
    fl_cmd->add_option("--tau2", fl.tau2, "Prior variance")->check(CLI::PositiveNumber);
    fl_cmd->add_option("--method", fl.method)->check(CLI::IsMember({"fisher", "jj", "dsvi"}));
    fl_cmd->add_option("--assembly", fl.assembly)->check(CLI::IsMember({"taylor", "mc"}));
    fl_cmd->add_option("--rho", fl.solver.rho, "Damping");
    fl_cmd->add_option("--tol", fl.solver.tol, "Convergence tolerance");
    fl_cmd->add_option("--max-iter", fl.solver.max_iter);
    fl_cmd->add_option("--n-samples", fl.n_samples, "Monte Carlo draws per expectation");
    fl_cmd->add_option("--dsvi-steps", fl.dsvi_steps);
    fl_cmd->add_option("--dsvi-step-size", fl.dsvi_step_size);

    McmcArgs mc;
    auto* mc_cmd = app.add_subcommand("mcmc", "Random-walk Metropolis-Hastings reference");
    add_common(mc_cmd, mc.common);
    mc_cmd->add_option("--data", mc.data)->required()->check(CLI::ExistingFile);
    mc_cmd->add_option("--tau2", mc.tau2)->check(CLI::PositiveNumber);
    mc_cmd->add_option("--iters", mc.iters)->check(CLI::PositiveNumber);
    mc_cmd->add_option("--burn-in", mc.burn_in)->check(CLI::NonNegativeNumber);
    mc_cmd->add_option("--proposal-scale", mc.proposal_scale, "Fixed scale; adaptive when omitted");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Replicated logistic-regression benchmark");
    add_common(bench_cmd, bench.common);
    bench_cmd->add_option("--n", bench.n_values, "Sample sizes")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--covariate", bench.covariates)->check(CLI::IsMember({"isotropic", "ar1"}));
    bench_cmd->add_option("--methods", bench.methods)->check(CLI::IsMember({"fisher", "jj", "dsvi"}));
    bench_cmd->add_option("--replicates", bench.replicates)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--seeds", bench.seeds, "One seed per replicate");
    bench_cmd->add_option("--mcmc-iters", bench.mcmc_iters)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--mcmc-burn-in", bench.mcmc_burn_in)->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--contour-pair", bench.contour_pair, "Two 1-based coordinates for contour grids")
        ->expected(2);

    CoverageArgs cov;
    auto* cov_cmd = app.add_subcommand("coverage", "Coverage curve of a fit against reference samples");
    add_common(cov_cmd, cov.common);
    cov_cmd->add_option("--fit", cov.fit, "JSON with mu and row-major sigma")->required()->check(CLI::ExistingFile);
    cov_cmd->add_option("--samples", cov.samples, "Samples CSV")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*gen_cmd) run_gen(gen);
        else if (*fit1d_cmd) run_fit1d(fit1d);
        else if (*fl_cmd) run_fit_logistic(fl);
        else if (*mc_cmd) run_mcmc(mc);
        else if (*bench_cmd) run_bench(bench);
        else if (*cov_cmd) run_coverage(cov);
    } catch (const fdvi::NumericalError& e) {
        report_numerical(e, "numerical_failure");
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        report_numerical(e, "runtime_failure");
        return kExitNumerical;
    }
    return 0;
}
