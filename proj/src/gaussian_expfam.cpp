#include "fdvi/gaussian_expfam.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fdvi/rng.hpp"

namespace fdvi {

namespace layout {

Index state_dim(Index m) {
    for (Index d = 1; param_dim(d) <= m; ++d) {
        if (param_dim(d) == m) return d;
    }
    throw std::invalid_argument("parameter length " + std::to_string(m) +
                                " is not d(d+3)/2 for any d >= 1");
}

std::vector<Slot> slots(Index d) {
    std::vector<Slot> out;
    out.reserve(static_cast<std::size_t>(param_dim(d)));
    for (Index j = 0; j < d; ++j) out.push_back({j, j});
    for (Index k = 1; k < d; ++k) {
        for (Index j = 0; j + k < d; ++j) out.push_back({j, j + k});
    }
    for (Index j = 0; j < d; ++j) out.push_back({j, -1});
    return out;
}

}  // namespace layout

std::vector<std::vector<JacobianTerm>> jacobian_terms(Index d) {
    std::vector<std::vector<JacobianTerm>> cols;
    for (const auto& s : layout::slots(d)) {
        if (s.second < 0) {
            cols.push_back({{s.first, -1, 1.0}});
        } else if (s.first == s.second) {
            cols.push_back({{s.first, s.first, 2.0}});
        } else {
            cols.push_back({{s.first, s.second, 1.0}, {s.second, s.first, 1.0}});
        }
    }
    return cols;
}

MatrixXd checked_cholesky(const MatrixXd& a, const char* what) {
    Eigen::LLT<MatrixXd> llt(a);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().allFinite()) {
        return llt.matrixL();
    }
    for (Index k = 1; k <= a.rows(); ++k) {
        Eigen::LLT<MatrixXd> lead(a.topLeftCorner(k, k));
        if (lead.info() != Eigen::Success) throw PdViolation(what, static_cast<int>(k));
    }
    throw PdViolation(what, static_cast<int>(a.rows()));
}

MomentParam::MomentParam(VectorXd mean, const MatrixXd& cov) : mean_(std::move(mean)) {
    if (cov.rows() != mean_.size() || cov.cols() != mean_.size()) {
        throw std::invalid_argument("covariance must be " + std::to_string(mean_.size()) + "x" +
                                    std::to_string(mean_.size()));
    }
    if (mean_.size() == 0) throw std::invalid_argument("dimension must be positive");
    if (!mean_.allFinite() || !cov.allFinite()) {
        throw std::invalid_argument("non-finite moment parameters");
    }
    cov_ = cov.selfadjointView<Eigen::Upper>();
    chol_ = checked_cholesky(cov_, "covariance");
}

NaturalParam::NaturalParam(VectorXd psi) : psi_(std::move(psi)), d_(layout::state_dim(psi_.size())) {}

MatrixXd NaturalParam::precision() const {
    MatrixXd omega(d_, d_);
    for (Index j = 0; j < d_; ++j) omega(j, j) = -2.0 * psi_(j);
    for (Index k = 1; k < d_; ++k) {
        const Index off = layout::band_offset(d_, k);
        for (Index j = 0; j + k < d_; ++j) {
            omega(j, j + k) = omega(j + k, j) = -psi_(off + j);
        }
    }
    return omega;
}

NaturalParam moment_to_natural(const MomentParam& p) {
    const Index d = p.dim();
    const MatrixXd omega = p.chol().transpose().triangularView<Eigen::Upper>().solve(
        p.chol().triangularView<Eigen::Lower>().solve(MatrixXd::Identity(d, d)));
    VectorXd psi(layout::param_dim(d));
    for (Index j = 0; j < d; ++j) psi(j) = -0.5 * omega(j, j);
    for (Index k = 1; k < d; ++k) {
        const Index off = layout::band_offset(d, k);
        // average the two triangles so the returned precision is exactly symmetric
        for (Index j = 0; j + k < d; ++j) psi(off + j) = -0.5 * (omega(j, j + k) + omega(j + k, j));
    }
    psi.tail(d) = omega * p.mean();
    return NaturalParam(std::move(psi));
}

MomentParam natural_to_moment(const NaturalParam& psi) {
    const Index d = psi.dim();
    const MatrixXd omega = psi.precision();
    const MatrixXd l = checked_cholesky(omega, "implied precision");
    const auto lt = l.transpose().triangularView<Eigen::Upper>();
    const auto lo = l.triangularView<Eigen::Lower>();
    MatrixXd sigma = lt.solve(lo.solve(MatrixXd::Identity(d, d)));
    VectorXd mu = lt.solve(lo.solve(psi.shift()));
    sigma = 0.5 * (sigma + sigma.transpose());
    return MomentParam(std::move(mu), sigma);
}

VectorXd sufficient_stats(const VectorXd& theta) {
    const Index d = theta.size();
    VectorXd s(layout::param_dim(d));
    Index a = 0;
    for (const auto& slot : layout::slots(d)) {
        s(a++) = slot.second < 0 ? theta(slot.first) : theta(slot.first) * theta(slot.second);
    }
    return s;
}

MatrixXd stat_jacobian(const VectorXd& theta) {
    const Index d = theta.size();
    const auto cols = jacobian_terms(d);
    MatrixXd jac = MatrixXd::Zero(d, layout::param_dim(d));
    for (Index a = 0; a < static_cast<Index>(cols.size()); ++a) {
        for (const auto& t : cols[static_cast<std::size_t>(a)]) {
            jac(t.row, a) = t.var < 0 ? t.coef : t.coef * theta(t.var);
        }
    }
    return jac;
}

VectorXd score(const VectorXd& theta, const NaturalParam& psi) {
    if (theta.size() != psi.dim()) throw std::invalid_argument("score: dimension mismatch");
    return stat_jacobian(theta) * psi.vec();
}

double log_normalizer(const NaturalParam& psi) {
    const Index d = psi.dim();
    const MatrixXd l = checked_cholesky(psi.precision(), "implied precision");
    // mu' Omega mu = |L^{-1} Omega mu|^2
    const VectorXd w = l.triangularView<Eigen::Lower>().solve(psi.shift());
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    return -0.5 * w.squaredNorm() + 0.5 * log_det - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
}

double log_density(const VectorXd& theta, const NaturalParam& psi) {
    if (theta.size() != psi.dim()) throw std::invalid_argument("log_density: dimension mismatch");
    return psi.vec().dot(sufficient_stats(theta)) + log_normalizer(psi);
}

MatrixXd sample(const MomentParam& p, Index n, std::uint64_t seed) {
    const MatrixXd z = standard_normal_matrix(seed, n, p.dim());
    MatrixXd out = z * p.chol().transpose();
    out.rowwise() += p.mean().transpose();
    return out;
}

MatrixXd sample(const NaturalParam& psi, Index n, std::uint64_t seed) {
    return sample(natural_to_moment(psi), n, seed);
}

}  // namespace fdvi
