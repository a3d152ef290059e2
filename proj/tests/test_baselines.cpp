#include <gtest/gtest.h>

#include <cmath>

#include "fdvi/baselines.hpp"
#include "fdvi/bench_harness.hpp"
#include "fdvi/error.hpp"

using namespace fdvi;

namespace {

GaussianTarget normal1(double mu, double s2) {
    return GaussianTarget(VectorXd::Constant(1, mu), MatrixXd::Constant(1, 1, s2));
}

Dataset dataset(std::uint64_t seed, Index n, Index d) {
    GenConfig g;
    g.n = n;
    g.d = d;
    g.seed = seed;
    return generate_dataset(g).data;
}

class NonFinite final : public TargetModel {
public:
    Index dim() const override { return 1; }
    double log_unnorm(const VectorXd& th) const override { return th(0) > 3.0 ? NAN : -0.5 * th(0) * th(0); }
    VectorXd score(const VectorXd& th) const override { return -th; }
};

}  // namespace

// Metropolis-Hastings ------------------------------------------------------------

TEST(Mcmc, ConfigValidation) {
    McmcConfig c;
    EXPECT_NO_THROW(c.validate());
    c.burn_in = c.n_iter;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.proposal_scale = -1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Mcmc, StandardNormalMoments) {
    McmcConfig c;
    c.n_iter = 70000;
    c.burn_in = 20000;
    c.seed = 3;
    const auto r = metropolis_hastings(normal1(0.0, 1.0), c);
    ASSERT_EQ(r.samples.rows(), 50000);
    EXPECT_LE(std::abs(r.mean(0)), 0.05);
    EXPECT_LE(std::abs(r.cov(0, 0) - 1.0), 0.1);
    EXPECT_GT(r.acceptance_rate, 0.1);
    EXPECT_LT(r.acceptance_rate, 0.6);
}

TEST(Mcmc, MultivariateGaussian) {
    MatrixXd cov(2, 2);
    cov << 1.0, 0.6, 0.6, 2.0;
    const GaussianTarget target(VectorXd::Constant(2, 1.0), cov);
    McmcConfig c;
    c.seed = 4;
    const auto r = metropolis_hastings(target, c);
    EXPECT_LT((r.mean - target.mean()).cwiseAbs().maxCoeff(), 0.1);
    EXPECT_LT((r.cov - cov).cwiseAbs().maxCoeff(), 0.15);
    // the reported moments are the sample statistics of the stored draws
    VectorXd m;
    MatrixXd s;
    sample_moments(r.samples, m, s);
    EXPECT_EQ(m, r.mean);
    EXPECT_EQ(s, r.cov);
    EXPECT_EQ(r.cov, r.cov.transpose());
}

TEST(Mcmc, UphillMovesAlwaysAccepted) {
    EXPECT_EQ(mh_accept_probability(0.0), 1.0);
    EXPECT_EQ(mh_accept_probability(3.5), 1.0);
    EXPECT_EQ(mh_accept_probability(INFINITY), 1.0);
    EXPECT_NEAR(mh_accept_probability(std::log(0.25)), 0.25, 1e-15);
    EXPECT_EQ(mh_accept_probability(-INFINITY), 0.0);
    EXPECT_EQ(mh_accept_probability(NAN), 0.0);
}

TEST(Mcmc, DeterministicPerSeed) {
    McmcConfig c;
    c.n_iter = 5000;
    c.burn_in = 1000;
    c.seed = 9;
    const auto a = metropolis_hastings(normal1(0.0, 1.0), c);
    const auto b = metropolis_hastings(normal1(0.0, 1.0), c);
    EXPECT_EQ(a.samples, b.samples);
    c.seed = 10;
    EXPECT_NE(metropolis_hastings(normal1(0.0, 1.0), c).samples, a.samples);
}

TEST(Mcmc, FixedScaleIsKept) {
    McmcConfig c;
    c.n_iter = 2000;
    c.burn_in = 100;
    c.proposal_scale = 0.7;
    const auto r = metropolis_hastings(normal1(0.0, 1.0), c);
    EXPECT_EQ(r.proposal_scale, 0.7);
}

TEST(Mcmc, NonFiniteStartIsAnError) {
    McmcConfig c;
    c.init = VectorXd::Constant(1, 5.0);
    EXPECT_THROW(metropolis_hastings(NonFinite{}, c), NumericalError);
}

// Jaakkola-Jordan -------------------------------------------------------------------

TEST(Jj, LambdaValues) {
    EXPECT_DOUBLE_EQ(jj_lambda(0.0), 0.125);
    EXPECT_NEAR(jj_lambda(1e-9), 0.125, 1e-15);
    EXPECT_NEAR(jj_lambda(2.0), std::tanh(1.0) / 8.0, 1e-15);
    EXPECT_NEAR(jj_lambda(2.0), 0.0951993, 1e-7);
    EXPECT_EQ(jj_lambda(-2.0), jj_lambda(2.0));
    // continuity across the small-argument branch
    EXPECT_NEAR(jj_lambda(0.999e-6), jj_lambda(1.001e-6), 1e-15);
}

TEST(Jj, ConvergesWithPosteriorPrecisionAbovePrior) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        for (Index n : {100, 200, 500}) {
            const auto data = dataset(seed, n, 5);
            const auto r = jj_fit(data);
            EXPECT_TRUE(r.converged) << seed << " " << n;
            EXPECT_LE(r.sweeps, 1000);
            const MatrixXd extra = r.moment.cov().inverse() - MatrixXd::Identity(5, 5) / data.tau2;
            EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (extra + extra.transpose())).eigenvalues().minCoeff(),
                      -1e-9);
        }
    }
}

TEST(Jj, FixedPointEquations) {
    const auto data = dataset(5, 200, 3);
    const auto r = jj_fit(data);
    const MatrixXd second = r.moment.cov() + r.moment.mean() * r.moment.mean().transpose();
    MatrixXd prec = MatrixXd::Identity(3, 3) / data.tau2;
    for (Index i = 0; i < data.n(); ++i) {
        const VectorXd x = data.x.row(i).transpose();
        prec += 2.0 * jj_lambda(std::sqrt(x.dot(second * x))) * x * x.transpose();
    }
    EXPECT_LT((prec.inverse() - r.moment.cov()).cwiseAbs().maxCoeff(), 1e-6);
    const VectorXd mu = prec.inverse() * (data.x.transpose() * (data.y.array() - 0.5).matrix());
    EXPECT_LT((mu - r.moment.mean()).cwiseAbs().maxCoeff(), 1e-6);
}

// DSVI --------------------------------------------------------------------------------

TEST(Dsvi, ZeroDataRecoversPrior) {
    Dataset empty{MatrixXd::Zero(0, 3), VectorXd::Zero(0), 5.0};
    DsviConfig c;
    c.seed = 2;
    const auto r = dsvi_fit(empty, c);
    EXPECT_LE(r.mean().norm(), 0.05);
    EXPECT_LE((r.cov() - 5.0 * MatrixXd::Identity(3, 3)).norm(), 0.2 * 5.0 * std::sqrt(3.0));
}

TEST(Dsvi, DeterministicPerSeed) {
    const auto data = dataset(6, 100, 3);
    DsviConfig c;
    c.n_steps = 2000;
    c.seed = 7;
    const auto a = dsvi_fit(data, c);
    const auto b = dsvi_fit(data, c);
    EXPECT_EQ(a.mean(), b.mean());
    EXPECT_EQ(a.cov(), b.cov());
}

TEST(Dsvi, CloseToMcmcOnModerateInstance) {
    const auto data = dataset(8, 200, 5);
    const LogisticTarget target(data);
    McmcConfig mc;
    mc.seed = 9;
    const auto ref = metropolis_hastings(target, mc);
    DsviConfig c;
    c.seed = 10;
    const auto fit = dsvi_fit(data, c);
    EXPECT_LE((fit.mean() - ref.mean).norm(), 0.2);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(fit.cov()).eigenvalues().minCoeff(), 0.0);
}

TEST(Dsvi, InputErrors) {
    const auto data = dataset(6, 10, 2);
    DsviConfig c;
    c.n_steps = 0;
    EXPECT_THROW(dsvi_fit(data, c), std::invalid_argument);
}

TEST(Dsvi, DivergenceGuard) {
    auto data = dataset(6, 50, 2);
    DsviConfig c;
    c.step_size = 1e6;
    c.n_steps = 100;
    EXPECT_THROW(dsvi_fit(data, c), NumericalError);
}

// KL in one dimension -------------------------------------------------------------------

TEST(Kl1D, ExactGaussianRecovered) {
    const auto r = kl_fit_1d(normal1(2.0, 9.0));
    EXPECT_NEAR(r.mu, 2.0, 1e-6);
    EXPECT_NEAR(r.sigma, 3.0, 1e-6);
}

TEST(Kl1D, UnitVarianceShiftCostsHalf) {
    const auto target = normal1(1.0, 1.0);
    EXPECT_NEAR(kl_divergence_1d(0.0, 1.0, target) - kl_divergence_1d(1.0, 1.0, target), 0.5, 1e-12);
}

TEST(Kl1D, MonotoneInDistanceFromCenter) {
    for (const Target1D& v : std::vector<Target1D>{StudentT{3.0}, Target1D{StudentT{1.0}}}) {
        const Target1DModel target(v);
        double prev = kl_divergence_1d(0.0, 1.0, target);
        for (int k = 1; k <= 40; ++k) {
            const double cur = kl_divergence_1d(0.1 * k, 1.0, target);
            EXPECT_GT(cur, prev);
            EXPECT_NEAR(cur, kl_divergence_1d(-0.1 * k, 1.0, target), 1e-12);
            prev = cur;
        }
    }
}

TEST(Kl1D, MixtureMeanBetweenComponents) {
    const Target1DModel target(NormalMixture{});
    const auto r = kl_fit_1d(target);
    EXPECT_GT(r.mu, 0.0);
    EXPECT_LT(r.mu, 2.5);
}

TEST(Kl1D, Errors) {
    EXPECT_THROW(kl_divergence_1d(0.0, 0.0, normal1(0.0, 1.0)), std::invalid_argument);
    const GaussianTarget g2(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
    EXPECT_THROW(kl_fit_1d(g2), std::invalid_argument);
    EXPECT_THROW(kl_fit_1d(NonFinite{}), IntegrationError);
}
