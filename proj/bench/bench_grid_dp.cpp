#include "epifeed/grid_dp.hpp"
#include "epifeed/oracle_check.hpp"

#include <benchmark/benchmark.h>

namespace {

// Fixed 3-state, 2-action, H = 3 instance; the argument sets the grid size m.
const epifeed::MicroInstance& instance() {
  static const epifeed::MicroInstance inst = [] {
    epifeed::Rng rng(7);
    for (;;) {
      auto cand = epifeed::random_micro_instance(rng);
      if (cand.kernel.num_states() == 3 && cand.kernel.num_actions() == 2 &&
          cand.kernel.horizon() == 3)
        return cand;
    }
  }();
  return inst;
}

void run_dense(benchmark::State& state, bool parallel) {
  const auto& inst = instance();
  const double zeta = inst.scores.covering_zeta() + 1e-9;
  const int H = inst.kernel.horizon();
  const double eps = 12.0 * H * H * zeta / static_cast<double>(state.range(0));
  epifeed::GridDpOptions opts;
  opts.mode = epifeed::GridDpMode::Dense;
  opts.parallel = parallel;
  for (auto _ : state) {
    auto pol = epifeed::grid_dp_plan(inst.kernel, inst.scores, zeta, eps, opts);
    benchmark::DoNotOptimize(pol.planned_value());
  }
  const double m = static_cast<double>(state.range(0));
  state.counters["cells"] = H * 3.0 * m * m * m;
}

void BM_DenseSerial(benchmark::State& state) { run_dense(state, false); }
void BM_DenseParallel(benchmark::State& state) { run_dense(state, true); }

}  // namespace

BENCHMARK(BM_DenseSerial)->Arg(16)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseParallel)->Arg(16)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
