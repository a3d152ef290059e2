#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "fdvi/gaussian_expfam.hpp"
#include "fdvi/rng.hpp"

namespace fdvi::testing {

/// Central finite-difference gradient.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x, double h = 1e-6) {
    VectorXd g(x.size());
    for (Index r = 0; r < x.size(); ++r) {
        VectorXd a = x, b = x;
        a(r) += h;
        b(r) -= h;
        g(r) = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
}

/// Random SPD matrix A A^T / d + floor * I.
inline MatrixXd random_spd(RngStream& rng, Index d, double floor = 0.5, double scale = 1.0) {
    MatrixXd a(d, d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) a(i, j) = rng.normal();
    MatrixXd s = scale * a * a.transpose() / static_cast<double>(d) + floor * MatrixXd::Identity(d, d);
    return 0.5 * (s + s.transpose());
}

inline MomentParam random_moment(RngStream& rng, Index d, double floor = 0.5, double scale = 1.0) {
    return MomentParam(rng.normal_vector(d), random_spd(rng, d, floor, scale));
}

inline double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace fdvi::testing
