#include <benchmark/benchmark.h>

#include <cmath>

#include "rnls/diagnostics.hpp"
#include "rnls/integrator.hpp"

using namespace rnls;

namespace {

kernels::Exec exec_of(const benchmark::State& st) {
    return st.range(1) ? kernels::Exec::parallel : kernels::Exec::serial;
}

WaveField gaussian(const GridSpec& g) {
    return sample_field(g, [](const std::array<double, 3>& x) {
        const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        return std::polar(std::exp(-0.5 * r2), 0.3 * x[0]);
    });
}

PhysicsParams rotating() {
    PhysicsParams p;
    p.Omega = 0.8;
    return p;
}

void BM_LineFFT(benchmark::State& st) {
    const GridSpec g = make_grid(2, 10.0, static_cast<std::size_t>(st.range(0)));
    WaveField u = gaussian(g);
    for (auto _ : st) {
        for (int axis = 0; axis < 2; ++axis) {
            kernels::line_fft(u.span(), g, axis, -1, exec_of(st));
            kernels::line_fft(u.span(), g, axis, +1, exec_of(st));
        }
        benchmark::ClobberMemory();
    }
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(g.size()));
}

void BM_StrangStep(benchmark::State& st) {
    const GridSpec g = make_grid(2, 10.0, static_cast<std::size_t>(st.range(0)));
    const OperatorSet ops(g, rotating());
    Integrator integ(ops, 1e-3, exec_of(st));
    WaveField u = gaussian(g);
    for (auto _ : st) {
        integ.step(u);
        benchmark::DoNotOptimize(u.values.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(g.size()));
}

void BM_Multiply(benchmark::State& st) {
    const GridSpec g = make_grid(2, 10.0, static_cast<std::size_t>(st.range(0)));
    WaveField u = gaussian(g);
    std::vector<cplx> f(g.size(), std::polar(1.0, 1e-3));
    for (auto _ : st) {
        kernels::multiply(u.span(), f, exec_of(st));
        benchmark::DoNotOptimize(u.values.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(g.size()));
}

void BM_Record(benchmark::State& st) {
    const GridSpec g = make_grid(2, 10.0, static_cast<std::size_t>(st.range(0)));
    const OperatorSet ops(g, rotating());
    const WaveField u = gaussian(g);
    for (auto _ : st) benchmark::DoNotOptimize(record(u, ops));
}

// second argument: 0 serial reference, 1 OpenMP
void grid_args(benchmark::internal::Benchmark* b) {
    for (long n : {128, 256, 512})
        for (long par : {0, 1}) b->Args({n, par});
    b->ArgNames({"N", "parallel"})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_LineFFT)->Apply(grid_args);
BENCHMARK(BM_StrangStep)->Apply(grid_args);
BENCHMARK(BM_Multiply)->Apply(grid_args);
BENCHMARK(BM_Record)->Apply(grid_args);

BENCHMARK_MAIN();
