#include <benchmark/benchmark.h>

#include <sstream>

#include "oxdr/analysis.hpp"
#include "session.hpp"

using namespace oxdr;
using namespace oxdr::analysis;

namespace {

const std::vector<Record>& session() {
  static const auto records = bench::simulated_session(std::chrono::seconds(10));
  return records;
}

void BM_Summarize(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(summarize(from_records(session())));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * session().size()));
}
BENCHMARK(BM_Summarize)->Unit(benchmark::kMillisecond);

void BM_Resample(benchmark::State& state) {
  ResampleOptions o;
  o.target_rate_hz = static_cast<double>(state.range(0));
  o.mode = state.range(1) ? AlignMode::nearest : AlignMode::interpolate;
  const auto selector = FeatureSelector::all();
  for (auto _ : state) benchmark::DoNotOptimize(resample(from_records(session()), selector, o));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * session().size()));
}
BENCHMARK(BM_Resample)->Args({90, 0})->Args({90, 1})->Args({1000, 0})->Unit(benchmark::kMillisecond);

void BM_ExportCsv(benchmark::State& state) {
  ResampleOptions o;
  o.target_rate_hz = 90;
  const auto table = resample(from_records(session()), FeatureSelector::all(), o);
  for (auto _ : state) {
    std::ostringstream out;
    benchmark::DoNotOptimize(export_csv(table, out));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * table.rows()));
}
BENCHMARK(BM_ExportCsv)->Unit(benchmark::kMillisecond);

}  // namespace
