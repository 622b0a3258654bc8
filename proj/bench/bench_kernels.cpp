#include <benchmark/benchmark.h>

#include "lct/hilbert.hpp"

using namespace lct;

namespace {

SegmentGeometry bench_geometry(int n_src) {
    SegmentGeometry g;
    g.n_src = n_src;
    g.det_cells = 910;
    g.theta = 0.3;
    return g;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& st) { st.SetLabel(st.range(0) ? "parallel" : "serial"); }

void BM_simulate(benchmark::State& st) {
    const auto spec = builtin("shepp-like", 3.0);
    const auto g = bench_geometry(251);
    for (auto _ : st) benchmark::DoNotOptimize(simulate(spec, g, exec_of(st)));
    label(st);
}

void BM_backproject(benchmark::State& st) {
    const auto spec = builtin("shepp-like", 3.0);
    const auto g = bench_geometry(251);
    const Sinogram s = simulate(spec, g);
    const DerivTable d = diff_u(s);
    const ImageGrid grid{128, 8.45 / 128, {}};
    for (auto _ : st) benchmark::DoNotOptimize(backproject(s, d, grid, {}, exec_of(st)));
    label(st);
}

void BM_invert_rows(benchmark::State& st) {
    const auto spec = builtin("shepp-like", 3.0);
    const auto g = bench_geometry(251);
    const Sinogram s = simulate(spec, g);
    const DerivTable d = diff_u(s);
    const ImageGrid grid{128, 8.45 / 128, {}};
    DirectionalOptions o;
    o.support_radius = 3.0;
    o.mode = OffsetMode::zero_mean;
    for (auto _ : st) benchmark::DoNotOptimize(invert_rows(s, d, grid, o, FovRule::detector_bounded, exec_of(st)));
    label(st);
}

void BM_bpf(benchmark::State& st) {
    MultiScanConfig c;
    c.base.n_src = 251;
    c.base.det_cells = 910;
    const auto spec = builtin("shepp-like", 3.0);
    std::vector<Sinogram> sinos;
    for (const auto& g : segments(c)) sinos.push_back(simulate(spec, g));
    const ImageGrid grid{128, 8.45 / 128, {}};
    BpfOptions o;
    o.support_radius = 3.0;
    for (auto _ : st) benchmark::DoNotOptimize(bpf_reconstruct(sinos, c, grid, o, exec_of(st)));
    label(st);
}

}  // namespace

BENCHMARK(BM_simulate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_backproject)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_invert_rows)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bpf)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
