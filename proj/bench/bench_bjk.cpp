// B_jk kernels: serial reference vs OpenMP double sum vs streaming Gram form.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "sglab/kernels.hpp"

using sglab::Matrix;
namespace kn = sglab::kernels;

namespace {

Matrix normalized_regressors(int m, long len)
{
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix phis(m, len);
    double r = 1.0;
    for (long j = 0; j < len; ++j) {
        for (int a = 0; a < m; ++a)
            phis(a, j) = g(rng);
        r += phis.col(j).squaredNorm();
        phis.col(j) /= std::sqrt(r);
    }
    return phis;
}

template <std::vector<double> (*Kernel)(const Matrix&, long, long)>
void run(benchmark::State& state)
{
    const int m = static_cast<int>(state.range(0));
    const long len = state.range(1);
    const Matrix phis = normalized_regressors(m, len);
    for (auto _ : state)
        benchmark::DoNotOptimize(Kernel(phis, 0, len));
    state.SetItemsProcessed(state.iterations() * len);
}

void args(benchmark::internal::Benchmark* b)
{
    for (int m : {2, 5})
        for (long len : {256, 1024, 4096})
            b->Args({m, len});
}

} // namespace

BENCHMARK(run<kn::bjk_series_serial>)->Name("bjk/serial")->Apply(args);
BENCHMARK(run<kn::bjk_series_parallel>)->Name("bjk/parallel")->Apply(args);
BENCHMARK(run<kn::bjk_series_gram>)->Name("bjk/gram")->Apply(args);

BENCHMARK_MAIN();
