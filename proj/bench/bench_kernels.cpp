#include <benchmark/benchmark.h>

#include <omp.h>

#include "qaoi/delay_model.hpp"
#include "qaoi/penalty.hpp"
#include "qaoi/policy.hpp"
#include "qaoi/simulator.hpp"
#include "qaoi/sq_solver.hpp"

namespace {

struct Setup {
    qaoi::QuantizedDelay qd;
    qaoi::GridSets grids;
};

Setup make_setup(double step) {
    auto dist = qaoi::parse_distribution("exp:lambda=1");
    const double q = 4.0 * dist.b_hi();
    const auto n = qaoi::intervals_for_step(q, step);
    Setup s{qaoi::solver_quantize(dist, q / static_cast<double>(n), qaoi::QuantDirection::Upper), {}};
    s.grids = qaoi::build_grids(q, n, q, s.qd);
    return s;
}

void BM_ValueTablesReference(benchmark::State& state) {
    Setup s = make_setup(state.range(0) / 1000.0);
    for (auto _ : state) benchmark::DoNotOptimize(qaoi::value_tables_reference(s.qd, qaoi::Penalty::identity(), s.grids));
}

void BM_ValueTablesParallel(benchmark::State& state) {
    Setup s = make_setup(state.range(0) / 1000.0);
    omp_set_num_threads(static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(qaoi::value_tables(s.qd, qaoi::Penalty::identity(), s.grids));
}

void BM_Replicate(benchmark::State& state) {
    auto dist = qaoi::parse_distribution("exp:lambda=1");
    omp_set_num_threads(static_cast<int>(state.range(0)));
    const double t = 4.0 * dist.b_hi();
    for (auto _ : state)
        benchmark::DoNotOptimize(qaoi::replicate(qaoi::Policy::zero_wait(), dist, qaoi::Penalty::identity(),
                                                 qaoi::ScheduleKind::Periodic, t, 2000 * t, 16, 1));
}

}  // namespace

// Step in thousandths; the reference recomputes G_R per candidate, so keep its grids coarse.
BENCHMARK(BM_ValueTablesReference)->Arg(160)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ValueTablesParallel)->ArgsProduct({{160, 80, 40, 20}, {1, 2, 4}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Replicate)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
