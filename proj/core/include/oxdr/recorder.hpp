#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "oxdr/codec.hpp"
#include "oxdr/model.hpp"

namespace oxdr::rec {

using Nanos = std::chrono::nanoseconds;

/// Monotonic time source driving the polling loop. Time points are offsets
/// from an arbitrary fixed origin.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual Nanos now() = 0;
  virtual void sleep_until(Nanos deadline) = 0;
};

/// std::chrono::steady_clock with thread sleeps.
class SteadyClock final : public Clock {
 public:
  Nanos now() override;
  void sleep_until(Nanos deadline) override;
};

/// Manually driven clock: sleep_until jumps straight to the deadline. Used for
/// deterministic (and fast) recordings; samplers may call advance() to model
/// work that takes time.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(Nanos origin = Nanos{0}) : now_(origin.count()) {}

  Nanos now() override { return Nanos{now_.load()}; }
  void sleep_until(Nanos deadline) override;
  void advance(Nanos d) { now_ += d.count(); }
  void set(Nanos t) { now_ = t.count(); }

 private:
  std::atomic<std::int64_t> now_;
};

/// Passed to samplers once per cycle.
class PollContext {
 public:
  PollContext(std::uint64_t cycle, std::int64_t ts_us) : cycle_(cycle), ts_us_(ts_us) {}

  std::uint64_t cycle() const noexcept { return cycle_; }
  /// Poll time in microseconds since the recording started.
  std::int64_t ts_us() const noexcept { return ts_us_; }

  /// Samples the device produced since the previous poll that will not be
  /// recorded because only the latest one is kept.
  void note_dropped(std::uint64_t n) noexcept { dropped_ += n; }
  std::uint64_t dropped() const noexcept { return dropped_; }

 private:
  std::uint64_t cycle_;
  std::int64_t ts_us_;
  std::uint64_t dropped_ = 0;
};

/// A physical or virtual device. The sampler returns the device's state for
/// the current cycle or std::nullopt when there is nothing new. The recorder
/// fills in device_id, name and serial on the returned record.
///
/// Samplers fed by other threads must hand back a consistent copy of the
/// latest state (see LatchedSource).
struct DeviceSource {
  std::string name;
  std::string serial;
  std::function<std::optional<DeviceRecord>(PollContext&)> sample;
};

/// Consumer of the record stream: metadata first, then snapshots.
class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void write(const Record& record) = 0;
  virtual void finalize(const RecordingMetadata& metadata) = 0;
};

/// Sink over a codec::RecordWriter with in-place metadata finalization.
class StreamSink final : public RecordSink {
 public:
  StreamSink(std::ostream& out, codec::Encoding encoding,
             codec::EncodeOptions options = {});

  void write(const Record& record) override { writer_.write(record); }
  void finalize(const RecordingMetadata& metadata) override { writer_.finalize(metadata); }

  const codec::RecordWriter& writer() const noexcept { return writer_; }

 private:
  codec::RecordWriter writer_;
};

/// Keeps records in memory; finalize() replaces the head metadata record.
class MemorySink final : public RecordSink {
 public:
  void write(const Record& record) override { records.push_back(record); }
  void finalize(const RecordingMetadata& metadata) override;

  std::vector<Record> records;
};

struct RecorderConfig {
  double polling_rate_hz = 100.0;
  /// Current host frame index; sampled once per cycle.
  std::function<std::int64_t()> frame_source;
  Clock* clock = nullptr;  // nullptr -> internal SteadyClock
  RecordSink* sink = nullptr;
  /// Session header. start_time defaults to the wall clock at run() when
  /// unset; polling_rate_hz is overwritten from this config.
  RecordingMetadata metadata;
  std::optional<UtcTime> start_time;
  /// Called on the polling thread at the start of every cycle, before any
  /// sampler. Registering devices from here takes effect in the same cycle.
  std::function<void(std::int64_t ts_us)> on_cycle;
};

struct DeviceStats {
  std::int64_t device_id = 0;
  std::string name;
  std::string serial;
  std::uint64_t polls = 0;
  std::uint64_t updates = 0;  // cycles where the sampler returned a record
  std::uint64_t dropped = 0;  // superseded samples reported by the source
};

struct RunResult {
  RecordingMetadata metadata;  // finalized
  std::uint64_t snapshots = 0;
  std::uint64_t late_cycles = 0;  // woke a full period or more past the deadline
  Nanos max_lateness{0};                // worst wake-up delay past a deadline
  std::vector<DeviceStats> devices;
};

/// Fixed-rate polling engine: one snapshot per update cycle, scheduled on
/// absolute deadlines start + k/rate and independent of the host frame rate.
class Recorder {
 public:
  Recorder();
  ~Recorder();
  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  /// Thread-safe; may be called while run() is active. Throws
  /// Error(duplicate_device) for a repeated (name, serial) pair and
  /// Error(invalid_argument) once the recording has been finalized.
  std::int64_t register_device(DeviceSource source);

  /// Runs until `duration` has elapsed (cycles whose deadline is before it
  /// are recorded) or stop is requested, then finalizes the sink. A recorder
  /// runs once.
  RunResult run(RecorderConfig config, std::optional<Nanos> duration,
                std::stop_token stop = {});

 private:
  struct Slot;
  void admit_pending();

  std::mutex mutex_;
  std::vector<std::unique_ptr<Slot>> pending_;
  std::vector<std::unique_ptr<Slot>> active_;
  std::int64_t next_id_ = 0;
  bool finalized_ = false;
  bool started_ = false;
};

/// Bridge for devices that are fed from another thread. Producers publish
/// whole records; the sampler returns the newest one not yet recorded and
/// reports the ones that were overwritten in between as dropped.
class LatchedSource {
 public:
  void publish(DeviceRecord record);
  DeviceSource source(std::string name, std::string serial);

 private:
  struct State {
    std::mutex mutex;
    std::optional<DeviceRecord> latest;
    std::uint64_t published = 0;
    std::uint64_t consumed = 0;
  };
  std::shared_ptr<State> state_ = std::make_shared<State>();
};

}  // namespace oxdr::rec
