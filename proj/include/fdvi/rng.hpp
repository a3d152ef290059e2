#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace fdvi {

// Counter-based generator: the k-th variate of a stream is a pure function of
// (seed, k), so draws can be produced in any order or in parallel and still
// match bit for bit. The mixing function is the SplitMix64 finalizer.

std::uint64_t mix64(std::uint64_t z) noexcept;

/// Uniform on the open interval (0, 1).
double counter_uniform(std::uint64_t seed, std::uint64_t counter) noexcept;

/// Standard normal, Box-Muller on the pair of uniforms (2*(k/2), 2*(k/2)+1)
/// taken from a sub-stream disjoint from counter_uniform(seed, .).
double counter_normal(std::uint64_t seed, std::uint64_t counter) noexcept;

/// Derive an independent seed for a sub-stream (replicate, method, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// n x d matrix of standard normals; entry (i, r) uses counter i*d + r.
Eigen::MatrixXd standard_normal_matrix(std::uint64_t seed, Eigen::Index n, Eigen::Index d);

/// Sequential view over a counter-based stream, for inherently serial
/// consumers (Markov chains, SGD loops, data generation).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {}

    double uniform() noexcept { return counter_uniform(seed_, uniform_counter_++); }
    double normal() noexcept { return counter_normal(seed_, normal_counter_++); }
    Eigen::VectorXd normal_vector(Eigen::Index d);

private:
    std::uint64_t seed_;
    std::uint64_t uniform_counter_ = 0;
    std::uint64_t normal_counter_ = 0;
};

}  // namespace fdvi
