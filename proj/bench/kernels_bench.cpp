#include <benchmark/benchmark.h>

#include "fdvi/bench_harness.hpp"
#include "fdvi/kernels.hpp"
#include "fdvi/rng.hpp"

namespace {

struct Inputs {
    fdvi::Dataset data;
    Eigen::MatrixXd thetas;
    Eigen::MatrixXd z;
    Eigen::VectorXd psi;
};

Inputs make_inputs(Eigen::Index k) {
    fdvi::GenConfig gen;
    gen.n = 200;
    gen.d = 5;
    gen.seed = 11;
    Inputs in{fdvi::generate_dataset(gen).data, fdvi::standard_normal_matrix(12, k, 5), {}, {}};
    in.z = fdvi::standard_normal_matrix(13, k, 5);
    in.psi = fdvi::standard_normal_matrix(14, fdvi::layout::param_dim(5), 1).col(0);
    return in;
}

template <bool Parallel>
void BM_LogisticScores(benchmark::State& state) {
    const auto in = make_inputs(state.range(0));
    for (auto _ : state) {
        auto out = Parallel ? fdvi::kernels::parallel::logistic_scores(in.data.x, in.data.y, 5.0, in.thetas)
                            : fdvi::kernels::serial::logistic_scores(in.data.x, in.data.y, 5.0, in.thetas);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_JacobianProducts(benchmark::State& state) {
    const auto in = make_inputs(state.range(0));
    for (auto _ : state) {
        auto out = Parallel ? fdvi::kernels::parallel::jacobian_t_products(in.thetas, in.z)
                            : fdvi::kernels::serial::jacobian_t_products(in.thetas, in.z);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_ColumnMoments(benchmark::State& state) {
    const auto in = make_inputs(state.range(0));
    const auto values = fdvi::kernels::serial::jacobian_t_products(in.thetas, in.z);
    for (auto _ : state) {
        auto out = Parallel ? fdvi::kernels::parallel::column_moments(values)
                            : fdvi::kernels::serial::column_moments(values);
        benchmark::DoNotOptimize(out.mean.data());
    }
}

template <bool Parallel>
void BM_Mahalanobis(benchmark::State& state) {
    const auto in = make_inputs(state.range(0));
    const Eigen::MatrixXd chol = Eigen::MatrixXd::Identity(5, 5);
    const Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
    for (auto _ : state) {
        auto out = Parallel ? fdvi::kernels::parallel::mahalanobis_sq(in.thetas, mean, chol)
                            : fdvi::kernels::serial::mahalanobis_sq(in.thetas, mean, chol);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK_TEMPLATE(BM_LogisticScores, false)->Arg(2000)->Arg(20000);
BENCHMARK_TEMPLATE(BM_LogisticScores, true)->Arg(2000)->Arg(20000);
BENCHMARK_TEMPLATE(BM_JacobianProducts, false)->Arg(2000)->Arg(20000);
BENCHMARK_TEMPLATE(BM_JacobianProducts, true)->Arg(2000)->Arg(20000);
BENCHMARK_TEMPLATE(BM_ColumnMoments, false)->Arg(2000)->Arg(20000);
BENCHMARK_TEMPLATE(BM_ColumnMoments, true)->Arg(2000)->Arg(20000);
BENCHMARK_TEMPLATE(BM_Mahalanobis, false)->Arg(80000);
BENCHMARK_TEMPLATE(BM_Mahalanobis, true)->Arg(80000);

BENCHMARK_MAIN();
