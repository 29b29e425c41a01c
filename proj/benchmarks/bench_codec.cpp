#include <benchmark/benchmark.h>

#include <sstream>

#include "oxdr/codec.hpp"
#include "session.hpp"

using namespace oxdr;

namespace {

const std::vector<Record>& session() {
  static const auto records = bench::simulated_session(std::chrono::seconds(10));
  return records;
}

void BM_EncodeSnapshot(benchmark::State& state) {
  const auto enc = static_cast<codec::Encoding>(state.range(0));
  const auto& snap = session().at(500);
  std::size_t bytes = 0;
  for (auto _ : state) {
    auto s = codec::encode_record(snap, enc);
    bytes += s.size();
    benchmark::DoNotOptimize(s);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
  state.SetLabel(std::string(codec::to_string(enc)));
}
BENCHMARK(BM_EncodeSnapshot)->Arg(0)->Arg(1);

void BM_DecodeSession(benchmark::State& state) {
  const auto enc = static_cast<codec::Encoding>(state.range(0));
  const auto bytes = codec::encode_stream(session(), enc).bytes;
  for (auto _ : state) {
    std::istringstream in(bytes);
    codec::RecordReader reader(in, enc);
    std::size_t n = 0;
    while (auto r = reader.next()) ++n;
    benchmark::DoNotOptimize(n);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * session().size()));
  state.SetLabel(std::string(codec::to_string(enc)));
}
BENCHMARK(BM_DecodeSession)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Transcode(benchmark::State& state) {
  const auto ndjson = codec::encode_stream(session(), codec::Encoding::ndjson).bytes;
  for (auto _ : state) {
    std::istringstream in(ndjson);
    std::ostringstream out;
    benchmark::DoNotOptimize(codec::transcode(in, codec::Encoding::ndjson, out, codec::Encoding::binary));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * ndjson.size()));
}
BENCHMARK(BM_Transcode)->Unit(benchmark::kMillisecond);

}  // namespace
