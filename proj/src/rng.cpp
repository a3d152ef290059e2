#include "fdvi/rng.hpp"

#include <cmath>
#include <numbers>

namespace fdvi {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kNormalTag = 0x6a09e667f3bcc909ULL;
}  // namespace

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double counter_uniform(std::uint64_t seed, std::uint64_t counter) noexcept {
    const std::uint64_t key = mix64(seed + kGolden);
    const std::uint64_t bits = mix64(key + (counter + 1) * kGolden);
    // 53 random bits, shifted by half an ulp so 0 is never returned
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double counter_normal(std::uint64_t seed, std::uint64_t counter) noexcept {
    const std::uint64_t sub = seed ^ kNormalTag;
    const std::uint64_t pair = counter >> 1;
    const double u1 = counter_uniform(sub, 2 * pair);
    const double u2 = counter_uniform(sub, 2 * pair + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return (counter & 1U) ? r * std::sin(angle) : r * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(mix64(seed) ^ mix64(stream + kGolden));
}

Eigen::MatrixXd standard_normal_matrix(std::uint64_t seed, Eigen::Index n, Eigen::Index d) {
    Eigen::MatrixXd z(n, d);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index r = 0; r < d; ++r) {
            z(i, r) = counter_normal(seed, static_cast<std::uint64_t>(i * d + r));
        }
    }
    return z;
}

Eigen::VectorXd RngStream::normal_vector(Eigen::Index d) {
    Eigen::VectorXd v(d);
    for (Eigen::Index r = 0; r < d; ++r) v(r) = normal();
    return v;
}

}  // namespace fdvi
