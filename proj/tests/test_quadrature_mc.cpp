#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fdvi/error.hpp"
#include "fdvi/quadrature_mc.hpp"
#include "test_util.hpp"

using namespace fdvi;
using fdvi::testing::fd_gradient;

namespace {

/// E[theta^k] for theta ~ N(0, 1).
double normal_moment(int k) {
    if (k % 2 == 1) return 0.0;
    double m = 1.0;
    for (int j = k - 1; j > 0; j -= 2) m *= j;
    return m;
}

Dataset one_row(const VectorXd& x) {
    Dataset data;
    data.x = x.transpose();
    data.y = VectorXd::Ones(1);
    return data;
}

double fij(const VectorXd& x, Index j, const VectorXd& th) { return th(j) / (1.0 + std::exp(x.dot(th))); }

}  // namespace

TEST(IntegratorConfig, Validation) {
    IntegratorConfig cfg;
    EXPECT_NO_THROW(cfg.validate(3));
    cfg.n_samples = 99;
    EXPECT_THROW(cfg.validate(3), std::invalid_argument);
    cfg = {};
    cfg.n_nodes = 1;
    EXPECT_THROW(cfg.validate(1), std::invalid_argument);
    cfg = {};
    cfg.method = IntegrationMethod::quadrature;
    EXPECT_NO_THROW(cfg.validate(1));
    EXPECT_THROW(cfg.validate(2), std::invalid_argument);
}

TEST(GaussHermite, RuleIsSymmetricAndNormalized) {
    for (int n : {2, 3, 10, 64, 128}) {
        const auto& r = gauss_hermite_rule(n);
        ASSERT_EQ(r.nodes.size(), static_cast<std::size_t>(n));
        double total = 0.0;
        for (int k = 0; k < n; ++k) {
            EXPECT_EQ(r.nodes[k], -r.nodes[n - 1 - k]);
            total += r.weights[k];
        }
        EXPECT_NEAR(total, std::sqrt(M_PI), 1e-13);
    }
    EXPECT_EQ(&gauss_hermite_rule(64), &gauss_hermite_rule(64));
}

TEST(GaussHermite, Examples) {
    EXPECT_NEAR(gh_expectation([](double t) { return t * t; }, 0.0, 1.0, 64), 1.0, 1e-12);
    EXPECT_NEAR(gh_expectation([](double t) { return t * t * t * t; }, 0.0, 1.0, 64), 3.0, 1e-12);
    EXPECT_NEAR(gh_expectation([](double t) { return logistic(t); }, 0.0, 1.0, 64), 0.5, 1e-12);
}

TEST(GaussHermite, ExactForPolynomialsUpToDegree2nMinus1) {
    for (int n : {2, 3, 4, 5, 8, 12, 16, 24, 32, 64}) {
        for (int k = 0; k <= 2 * n - 1; ++k) {
            const double exact = normal_moment(k);
            const double got = gh_expectation([k](double t) { return std::pow(t, k); }, 0.0, 1.0, n);
            // relative to the integrand's scale sqrt(E[theta^2k]); odd moments cancel only to rounding
            const double scale = std::sqrt(normal_moment(2 * k));
            ASSERT_NEAR(got, exact, 1e-12 * std::max(1.0, scale)) << "n=" << n << " k=" << k;
        }
    }
}

TEST(GaussHermite, ShiftedAndScaled) {
    // E[(theta - 1)^2] under N(1, 4) = 4, E[theta^3] = mu^3 + 3 mu s2
    EXPECT_NEAR(gh_expectation([](double t) { return (t - 1.0) * (t - 1.0); }, 1.0, 4.0, 16), 4.0, 1e-12);
    EXPECT_NEAR(gh_expectation([](double t) { return t * t * t; }, 1.0, 4.0, 16), 1.0 + 12.0, 1e-12);
}

TEST(GaussHermite, NonFiniteIntegrandReportsNode) {
    try {
        gh_expectation([](double t) { return t > 3.0 ? NAN : t; }, 0.0, 1.0, 20);
        FAIL() << "expected IntegrationError";
    } catch (const IntegrationError& e) {
        EXPECT_LT(e.location(), 20U);
        EXPECT_GT(gauss_hermite_rule(20).nodes[e.location()] * std::sqrt(2.0), 3.0);
    }
    EXPECT_THROW(gh_expectation([](double t) { return t; }, 0.0, 0.0, 8), std::invalid_argument);
}

TEST(MonteCarlo, IdentityWithinFourStandardErrors) {
    RngStream rng(1);
    const auto p = fdvi::testing::random_moment(rng, 3);
    IntegratorConfig cfg;
    cfg.n_samples = 100000;
    cfg.seed = 5;
    const auto est = mc_expectation([](const VectorXd& t) { return t; }, moment_to_natural(p), cfg);
    for (Index r = 0; r < 3; ++r) EXPECT_LT(std::abs(est.mean(r) - p.mean()(r)), 4.0 * est.std_error(r));
}

TEST(MonteCarlo, ConstantIsExact) {
    IntegratorConfig cfg;
    const auto psi = moment_to_natural(MomentParam(VectorXd::Zero(2), MatrixXd::Identity(2, 2)));
    const auto est = mc_expectation([](const VectorXd&) { return VectorXd::Constant(2, 2.5); }, psi, cfg);
    EXPECT_EQ(est.mean, VectorXd::Constant(2, 2.5));
    EXPECT_EQ(est.std_error, VectorXd::Zero(2));
}

TEST(MonteCarlo, DeterministicPerSeed) {
    IntegratorConfig cfg;
    cfg.seed = 9;
    const auto psi = moment_to_natural(MomentParam(VectorXd::Ones(2), MatrixXd::Identity(2, 2)));
    const auto f = [](const VectorXd& t) { return VectorXd::Constant(1, std::sin(t(0)) * t(1)); };
    const auto a = mc_expectation(f, psi, cfg);
    const auto b = mc_expectation(f, psi, cfg);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_error, b.std_error);
    cfg.seed = 10;
    EXPECT_NE(mc_expectation(f, psi, cfg).mean, a.mean);
}

TEST(MonteCarlo, NonFiniteReportsDrawIndex) {
    IntegratorConfig cfg;
    const auto psi = moment_to_natural(MomentParam(VectorXd::Zero(1), MatrixXd::Identity(1, 1)));
    try {
        mc_expectation([](const VectorXd& t) { return VectorXd::Constant(1, t(0) > 2.0 ? INFINITY : 0.0); }, psi,
                       cfg);
        FAIL() << "expected IntegrationError";
    } catch (const IntegrationError& e) {
        const auto draws = StandardDraws(cfg.seed, cfg.n_samples, 1);
        EXPECT_GT(draws.standard()(static_cast<Index>(e.location()), 0), 2.0);
    }
}

TEST(MonteCarlo, StandardErrorIsCalibrated) {
    // the 99% interval around each estimate should cover the truth in >= 95% of runs
    const auto psi = moment_to_natural(MomentParam(VectorXd::Zero(1), MatrixXd::Identity(1, 1)));
    IntegratorConfig cfg;
    cfg.n_samples = 1000;
    int covered = 0;
    for (int rep = 0; rep < 200; ++rep) {
        cfg.seed = derive_seed(77, static_cast<std::uint64_t>(rep));
        const auto est = mc_expectation([](const VectorXd& t) { return t; }, psi, cfg);
        if (std::abs(est.mean(0)) <= 2.576 * est.std_error(0)) ++covered;
    }
    EXPECT_GE(covered, 190);
}

TEST(MonteCarlo, CommonRandomNumbersFollowTheCholeskyFactor) {
    const StandardDraws draws(3, 500, 2);
    MatrixXd cov(2, 2);
    cov << 2.0, 0.5, 0.5, 1.0;
    const MomentParam p(VectorXd::Ones(2), cov);
    const MatrixXd th = draws.transform(p);
    for (Index i = 0; i < 500; ++i) {
        const VectorXd expected = p.mean() + p.chol() * draws.standard().row(i).transpose();
        ASSERT_LT((th.row(i).transpose() - expected).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Taylor, HessianMatchesFiniteDifferencesOfGradient) {
    RngStream rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        const Index d = 1 + rep % 5;
        const VectorXd x = rng.normal_vector(d);
        const VectorXd th = rng.normal_vector(d);
        const Index j = rep % d;
        const auto g = fd_gradient([&](const VectorXd& t) { return fij(x, j, t); }, th);
        EXPECT_LT((fij_gradient(x, j, th) - g).cwiseAbs().maxCoeff(), 1e-6);
        const MatrixXd h = fij_hessian(x, j, th);
        for (Index r = 0; r < d; ++r) {
            const auto hr = fd_gradient([&](const VectorXd& t) { return fij_gradient(x, j, t)(r); }, th);
            ASSERT_LT((h.row(r).transpose() - hr).cwiseAbs().maxCoeff(), 1e-5);
        }
        EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Taylor, ZeroCovarianceIsPlugIn) {
    RngStream rng(22);
    for (int rep = 0; rep < 20; ++rep) {
        const Index d = 3;
        const VectorXd x = rng.normal_vector(d), mu = rng.normal_vector(d);
        const auto data = one_row(x);
        const MatrixXd zero = MatrixXd::Zero(d, d);
        for (Index j = 0; j < d; ++j) EXPECT_NEAR(taylor_expectation_fij(0, j, mu, zero, data), fij(x, j, mu), 1e-14);
        EXPECT_NEAR(taylor_expectation_sigmoid(0, mu, zero, data), 1.0 / (1.0 + std::exp(x.dot(mu))), 1e-14);
    }
}

TEST(Taylor, SmallCovarianceApproachesPlugIn) {
    const VectorXd x = (VectorXd(2) << 0.7, -1.2).finished();
    const VectorXd mu = (VectorXd(2) << 0.3, 0.5).finished();
    const auto data = one_row(x);
    const MomentParam p(mu, 1e-10 * MatrixXd::Identity(2, 2));
    EXPECT_NEAR(taylor_expectation_fij(0, 1, p, data), fij(x, 1, mu), 1e-9);
}

TEST(Taylor, ZeroCovariateIsExact) {
    RngStream rng(23);
    const auto p = fdvi::testing::random_moment(rng, 3);
    const auto data = one_row(VectorXd::Zero(3));
    for (Index j = 0; j < 3; ++j) EXPECT_EQ(taylor_expectation_fij(0, j, p, data), p.mean()(j) / 2.0);
    EXPECT_EQ(taylor_expectation_sigmoid(0, p, data), 0.5);
}

TEST(Taylor, ModerateScaleWithinFivePercentOfMonteCarlo) {
    RngStream rng(24);
    for (int rep = 0; rep < 10; ++rep) {
        const Index d = 3;
        VectorXd x = rng.normal_vector(d);
        x *= (0.5 + 1.5 * rng.uniform()) / x.norm();  // |x| <= 2
        MatrixXd cov = fdvi::testing::random_spd(rng, d, 0.05, 0.2);
        cov *= 0.25 / cov.norm();  // |Sigma| <= 0.25
        const MomentParam p(rng.normal_vector(d), cov);
        const auto data = one_row(x);
        IntegratorConfig cfg;
        cfg.n_samples = 1000000;
        cfg.seed = derive_seed(24, static_cast<std::uint64_t>(rep));
        const auto psi = moment_to_natural(p);
        const auto mc = mc_expectation(
            [&](const VectorXd& t) {
                VectorXd out(d + 1);
                for (Index j = 0; j < d; ++j) out(j) = fij(x, j, t);
                out(d) = 1.0 / (1.0 + std::exp(x.dot(t)));
                return out;
            },
            psi, cfg);
        for (Index j = 0; j < d; ++j) {
            const double t = taylor_expectation_fij(0, j, p, data);
            // relative tolerance, with an absolute floor for values near zero
            EXPECT_LT(std::abs(t - mc.mean(j)), 0.05 * std::abs(mc.mean(j)) + 4.0 * mc.std_error(j))
                << "rep " << rep << " j " << j;
        }
        EXPECT_LT(std::abs(taylor_expectation_sigmoid(0, p, data) - mc.mean(d)), 0.05 * mc.mean(d));
    }
}
