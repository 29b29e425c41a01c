// Peak heap use of streaming decode must not grow with the stream length.
// Every allocation goes through the replaced global operator new below.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <new>
#include <streambuf>
#include <string>

#include "oxdr/analysis.hpp"
#include "oxdr/codec.hpp"
#include "oxdr/error.hpp"

namespace {

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};

void* track(std::size_t n) {
  // Header keeps the size for the matching delete.
  auto* p = static_cast<std::size_t*>(std::malloc(n + 16));
  if (!p) throw std::bad_alloc();
  *p = n;
  const std::size_t live = g_live.fetch_add(n) + n;
  std::size_t peak = g_peak.load();
  while (live > peak && !g_peak.compare_exchange_weak(peak, live)) {
  }
  return reinterpret_cast<char*>(p) + 16;
}

void untrack(void* q) noexcept {
  if (!q) return;
  auto* p = reinterpret_cast<std::size_t*>(static_cast<char*>(q) - 16);
  g_live.fetch_sub(*p);
  std::free(p);
}

}  // namespace

void* operator new(std::size_t n) { return track(n); }
void* operator new[](std::size_t n) { return track(n); }
void operator delete(void* p) noexcept { untrack(p); }
void operator delete[](void* p) noexcept { untrack(p); }
void operator delete(void* p, std::size_t) noexcept { untrack(p); }
void operator delete[](void* p, std::size_t) noexcept { untrack(p); }

namespace {

using namespace oxdr;

// Produces a metadata record followed by `count` snapshots, encoding each
// one only when the reader asks for more bytes.
class SyntheticSession final : public std::streambuf {
 public:
  SyntheticSession(codec::Encoding enc, std::size_t count) : enc_(enc), count_(count) {}

  std::size_t bytes() const { return bytes_; }

 protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    if (next_ > count_) return traits_type::eof();
    chunk_ = codec::encode_record(make(next_++), enc_);
    bytes_ += chunk_.size();
    setg(chunk_.data(), chunk_.data(), chunk_.data() + chunk_.size());
    return traits_type::to_int_type(*gptr());
  }

 private:
  static Record make(std::size_t i) {
    if (i == 0) {
      RecordingMetadata m;
      m.polling_rate_hz = 100;
      m.participant_id = "P001";
      m.hmd_name = "HMD";
      return m;
    }
    Snapshot s;
    s.frame = static_cast<std::int64_t>(i);
    s.timestamp_us = static_cast<std::int64_t>(i) * 10000;
    for (std::int64_t d = 0; d < 3; ++d) {
      DeviceRecord dev;
      dev.device_id = d;
      dev.name = "Device" + std::to_string(d);
      dev.serial = "SER-" + std::to_string(d);
      dev.device_timestamp_us = s.timestamp_us;
      const double t = static_cast<double>(i) * 0.01;
      for (int k = 0; k < 6; ++k) {
        dev.features.push_back({"position_" + std::to_string(k), Vector3{t, t * 0.5 + k, -t}});
        dev.features.push_back({"rotation_" + std::to_string(k), Quaternion{0, 0.6, 0, 0.8}});
        dev.features.push_back({"button_" + std::to_string(k), Button{0.25 * k, k % 2 == 0}});
      }
      s.devices.push_back(std::move(dev));
    }
    return s;
  }

  codec::Encoding enc_;
  std::size_t count_;
  std::size_t next_ = 0;
  std::string chunk_;
  std::size_t bytes_ = 0;
};

struct Measure {
  std::size_t records = 0;
  std::size_t bytes = 0;
  std::size_t peak = 0;  // above the live bytes at start
};

template <class Consume>
Measure measure(codec::Encoding enc, std::size_t count, Consume consume) {
  SyntheticSession buf(enc, count);
  std::istream in(&buf);
  const std::size_t base = g_live.load();
  g_peak.store(base);
  Measure m;
  {
    codec::RecordReader reader(in, enc);
    m.records = consume(reader);
  }
  m.peak = g_peak.load() - base;
  m.bytes = buf.bytes();
  return m;
}

std::size_t drain(codec::RecordReader& reader) {
  std::size_t n = 0;
  while (reader.next()) ++n;
  return n;
}

std::size_t summarize_stream(codec::RecordReader& reader) {
  return analysis::summarize(analysis::from_reader(reader)).snapshots + 1;
}

int failures = 0;

void expect(bool ok, const char* what) {
  std::printf("%s: %s\n", ok ? "ok" : "FAILED", what);
  if (!ok) ++failures;
}

}  // namespace

int main() {
  constexpr std::size_t kSmall = 1000;
  constexpr std::size_t kLarge = 25000;  // roughly 100 MB of ndjson
  constexpr std::size_t kBound = std::size_t{1} << 20;

  for (auto enc : {codec::Encoding::ndjson, codec::Encoding::binary}) {
    const auto name = std::string(codec::to_string(enc));
    const auto small = measure(enc, kSmall, drain);
    const auto large = measure(enc, kLarge, drain);
    std::printf("%s decode: %zu records / %zu bytes peak %zu; %zu records / %zu bytes peak %zu\n",
                name.c_str(), small.records, small.bytes, small.peak, large.records, large.bytes,
                large.peak);
    expect(small.records == kSmall + 1 && large.records == kLarge + 1, "all records decoded");
    expect(large.peak <= small.peak + 64 * 1024, "peak independent of stream length");
    expect(large.peak < kBound, "peak under 1 MiB");

    const auto summary = measure(enc, kLarge, summarize_stream);
    std::printf("%s summarize: peak %zu\n", name.c_str(), summary.peak);
    expect(summary.records == kLarge + 1, "summary counts every snapshot");
    expect(summary.peak < kBound, "summary peak under 1 MiB");
  }

  // An endless line is cut off at the record limit instead of buffered.
  {
    std::string junk(1 << 16, 'x');
    class Endless final : public std::streambuf {
     public:
      explicit Endless(std::string& s) : s_(s) {}
      int_type underflow() override {
        setg(s_.data(), s_.data(), s_.data() + s_.size());
        return traits_type::to_int_type(*gptr());
      }

     private:
      std::string& s_;
    } buf(junk);
    std::istream in(&buf);
    codec::DecodeOptions opts;
    opts.max_record_bytes = 256 * 1024;
    const std::size_t base = g_live.load();
    g_peak.store(base);
    bool rejected = false;
    try {
      codec::RecordReader reader(in, codec::Encoding::ndjson, opts);
      reader.next();
    } catch (const Error& e) {
      rejected = e.code() == ErrorCode::malformed_record;
    }
    const std::size_t peak = g_peak.load() - base;
    std::printf("endless line: peak %zu\n", peak);
    expect(rejected, "endless line rejected as malformed_record");
    expect(peak < 4 * opts.max_record_bytes, "endless line peak bounded by the record limit");
  }

  std::printf("%s\n", failures == 0 ? "PASS" : "FAIL");
  return failures == 0 ? 0 : 1;
}
