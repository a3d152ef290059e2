#include "fdvi/kernels.hpp"

#include <cmath>

#include "fdvi/targets.hpp"

namespace fdvi::kernels {

double pairwise_sum(std::span<const double> values) noexcept {
    constexpr std::size_t kBlock = 16;
    if (values.size() <= kBlock) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

void column_moments_one(const MatrixXd& values, Index j, ColumnMoments& out) {
    const Index k = values.rows();
    const std::span<const double> col(values.col(j).data(), static_cast<std::size_t>(k));
    const double mean = pairwise_sum(col) / static_cast<double>(k);
    std::vector<double> dev(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) {
        const double e = values(i, j) - mean;
        dev[static_cast<std::size_t>(i)] = e * e;
    }
    const double var = k > 1 ? pairwise_sum(dev) / static_cast<double>(k - 1) : 0.0;
    out.mean(j) = mean;
    out.std_error(j) = std::sqrt(var / static_cast<double>(k));
}

void logistic_score_row(const MatrixXd& x, const VectorXd& y, double tau2, const MatrixXd& thetas, Index i,
                        MatrixXd& out) {
    const Index n = x.rows();
    const Index d = x.cols();
    for (Index r = 0; r < d; ++r) out(i, r) = -thetas(i, r) / tau2;
    for (Index l = 0; l < n; ++l) {
        double u = 0.0;
        for (Index r = 0; r < d; ++r) u += x(l, r) * thetas(i, r);
        const double resid = y(l) - logistic(u);
        for (Index r = 0; r < d; ++r) out(i, r) += x(l, r) * resid;
    }
}

void jacobian_t_row(const MatrixXd& thetas, const MatrixXd& z, Index i,
                    const std::vector<std::vector<JacobianTerm>>& cols, MatrixXd& out) {
    for (std::size_t a = 0; a < cols.size(); ++a) {
        double acc = 0.0;
        for (const auto& t : cols[a]) {
            const double entry = t.var < 0 ? t.coef : t.coef * thetas(i, t.var);
            acc += entry * z(i, t.row);
        }
        out(i, static_cast<Index>(a)) = acc;
    }
}

double squared_residual_row(const MatrixXd& thetas, const MatrixXd& z, const VectorXd& psi, Index i,
                            const std::vector<std::vector<JacobianTerm>>& cols) {
    const Index d = thetas.cols();
    VectorXd r = z.row(i).transpose();
    for (std::size_t a = 0; a < cols.size(); ++a) {
        for (const auto& t : cols[a]) {
            const double entry = t.var < 0 ? t.coef : t.coef * thetas(i, t.var);
            r(t.row) -= entry * psi(static_cast<Index>(a));
        }
    }
    double s = 0.0;
    for (Index q = 0; q < d; ++q) s += r(q) * r(q);
    return s;
}

double mahalanobis_row(const MatrixXd& samples, const VectorXd& mean, const MatrixXd& chol_lower, Index i) {
    const Index d = samples.cols();
    // forward substitution L w = (x - mean)
    VectorXd w(d);
    for (Index r = 0; r < d; ++r) {
        double acc = samples(i, r) - mean(r);
        for (Index c = 0; c < r; ++c) acc -= chol_lower(r, c) * w(c);
        w(r) = acc / chol_lower(r, r);
    }
    return w.squaredNorm();
}

ColumnMoments make_moments(Index c) { return {VectorXd::Zero(c), VectorXd::Zero(c)}; }

}  // namespace

namespace serial {

ColumnMoments column_moments(const MatrixXd& values) {
    auto out = make_moments(values.cols());
    for (Index j = 0; j < values.cols(); ++j) column_moments_one(values, j, out);
    return out;
}

MatrixXd logistic_scores(const MatrixXd& x, const VectorXd& y, double tau2, const MatrixXd& thetas) {
    MatrixXd out(thetas.rows(), thetas.cols());
    for (Index i = 0; i < thetas.rows(); ++i) logistic_score_row(x, y, tau2, thetas, i, out);
    return out;
}

MatrixXd jacobian_t_products(const MatrixXd& thetas, const MatrixXd& z) {
    const auto cols = jacobian_terms(thetas.cols());
    MatrixXd out(thetas.rows(), static_cast<Index>(cols.size()));
    for (Index i = 0; i < thetas.rows(); ++i) jacobian_t_row(thetas, z, i, cols, out);
    return out;
}

VectorXd squared_residuals(const MatrixXd& thetas, const MatrixXd& z, const VectorXd& psi) {
    const auto cols = jacobian_terms(thetas.cols());
    VectorXd out(thetas.rows());
    for (Index i = 0; i < thetas.rows(); ++i) out(i) = squared_residual_row(thetas, z, psi, i, cols);
    return out;
}

VectorXd mahalanobis_sq(const MatrixXd& samples, const VectorXd& mean, const MatrixXd& chol_lower) {
    VectorXd out(samples.rows());
    for (Index i = 0; i < samples.rows(); ++i) out(i) = mahalanobis_row(samples, mean, chol_lower, i);
    return out;
}

}  // namespace serial

namespace parallel {

ColumnMoments column_moments(const MatrixXd& values) {
    auto out = make_moments(values.cols());
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < values.cols(); ++j) column_moments_one(values, j, out);
    return out;
}

MatrixXd logistic_scores(const MatrixXd& x, const VectorXd& y, double tau2, const MatrixXd& thetas) {
    MatrixXd out(thetas.rows(), thetas.cols());
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < thetas.rows(); ++i) logistic_score_row(x, y, tau2, thetas, i, out);
    return out;
}

MatrixXd jacobian_t_products(const MatrixXd& thetas, const MatrixXd& z) {
    const auto cols = jacobian_terms(thetas.cols());
    MatrixXd out(thetas.rows(), static_cast<Index>(cols.size()));
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < thetas.rows(); ++i) jacobian_t_row(thetas, z, i, cols, out);
    return out;
}

VectorXd squared_residuals(const MatrixXd& thetas, const MatrixXd& z, const VectorXd& psi) {
    const auto cols = jacobian_terms(thetas.cols());
    VectorXd out(thetas.rows());
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < thetas.rows(); ++i) out(i) = squared_residual_row(thetas, z, psi, i, cols);
    return out;
}

VectorXd mahalanobis_sq(const MatrixXd& samples, const VectorXd& mean, const MatrixXd& chol_lower) {
    VectorXd out(samples.rows());
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < samples.rows(); ++i) out(i) = mahalanobis_row(samples, mean, chol_lower, i);
    return out;
}

}  // namespace parallel

}  // namespace fdvi::kernels
