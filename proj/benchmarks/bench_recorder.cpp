#include <benchmark/benchmark.h>

#include "session.hpp"

using namespace oxdr;

namespace {

// Cost of polling the three default simulated devices, per cycle.
void BM_RecordVirtual(benchmark::State& state) {
  const auto cycles = state.range(0);
  for (auto _ : state) {
    auto records = bench::simulated_session(std::chrono::milliseconds(cycles * 10));
    benchmark::DoNotOptimize(records);
  }
  state.SetItemsProcessed(state.iterations() * cycles);
}
BENCHMARK(BM_RecordVirtual)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
