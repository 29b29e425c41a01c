#include "oxdr/recorder.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "oxdr/error.hpp"

namespace oxdr::rec {

Nanos SteadyClock::now() {
  return std::chrono::duration_cast<Nanos>(
      std::chrono::steady_clock::now().time_since_epoch());
}

void SteadyClock::sleep_until(Nanos deadline) {
  std::this_thread::sleep_until(std::chrono::steady_clock::time_point{
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(deadline)});
}

void VirtualClock::sleep_until(Nanos deadline) {
  auto cur = now_.load();
  while (cur < deadline.count() && !now_.compare_exchange_weak(cur, deadline.count())) {
  }
}

StreamSink::StreamSink(std::ostream& out, codec::Encoding encoding,
                       codec::EncodeOptions options)
    : writer_(out, encoding, codec::WriterOptions{options, true}) {}

void MemorySink::finalize(const RecordingMetadata& metadata) {
  if (records.empty() || !is_metadata(records.front()))
    throw Error(ErrorCode::invalid_argument, "no metadata record to finalize");
  records.front() = metadata;
}

struct Recorder::Slot {
  DeviceSource source;
  DeviceStats stats;
};

Recorder::Recorder() = default;
Recorder::~Recorder() = default;

std::int64_t Recorder::register_device(DeviceSource source) {
  if (!source.sample)
    throw Error(ErrorCode::invalid_argument, "device '" + source.name + "' has no sampler");
  std::lock_guard lock(mutex_);
  if (finalized_)
    throw Error(ErrorCode::invalid_argument, "recording already finalized");
  auto same = [&](const std::unique_ptr<Slot>& s) {
    return s->source.name == source.name && s->source.serial == source.serial;
  };
  if (std::any_of(active_.begin(), active_.end(), same) ||
      std::any_of(pending_.begin(), pending_.end(), same)) {
    throw Error(ErrorCode::duplicate_device,
                "device '" + source.name + "' with serial '" + source.serial +
                    "' is already registered");
  }
  auto slot = std::make_unique<Slot>();
  slot->stats.device_id = next_id_++;
  slot->stats.name = source.name;
  slot->stats.serial = source.serial;
  slot->source = std::move(source);
  pending_.push_back(std::move(slot));
  return pending_.back()->stats.device_id;
}

void Recorder::admit_pending() {
  std::lock_guard lock(mutex_);
  for (auto& s : pending_) active_.push_back(std::move(s));
  pending_.clear();
}

RunResult Recorder::run(RecorderConfig config, std::optional<Nanos> duration,
                        std::stop_token stop) {
  {
    std::lock_guard lock(mutex_);
    if (started_) throw Error(ErrorCode::invalid_argument, "a recorder runs only once");
    started_ = true;
  }
  const double rate = config.polling_rate_hz;
  if (!(rate > 0) || !std::isfinite(rate))
    throw Error(ErrorCode::invalid_argument, "polling_rate_hz must be positive and finite");
  if (config.sink == nullptr) throw Error(ErrorCode::invalid_argument, "recorder has no sink");
  if (duration && duration->count() < 0)
    throw Error(ErrorCode::invalid_argument, "duration must not be negative");

  SteadyClock steady;
  Clock& clock = config.clock ? *config.clock : steady;
  RecordSink& sink = *config.sink;

  RunResult result;
  RecordingMetadata meta = std::move(config.metadata);
  meta.polling_rate_hz = rate;
  meta.start_time = config.start_time.value_or(utc_now());
  meta.end_time.reset();

  auto emit = [&](const Record& r) {
    try {
      sink.write(r);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::sink_failure,
                  "sink write failed after " + std::to_string(result.snapshots) +
                      " snapshots; output is truncated: " + e.what());
    }
  };

  const Nanos origin = clock.now();
  emit(meta);

  auto deadline_of = [&](std::uint64_t k) {
    return origin + Nanos{std::llround(static_cast<double>(k) * 1e9 / rate)};
  };

  Nanos last_now = origin;
  std::int64_t last_ts = -1;
  std::int64_t last_frame = 0;
  bool duration_reached = false;

  for (std::uint64_t k = 0;;) {
    const Nanos deadline = deadline_of(k);
    if (duration && deadline - origin >= *duration) {
      duration_reached = true;
      break;
    }
    if (stop.stop_requested()) break;

    clock.sleep_until(deadline);
    const Nanos now = clock.now();
    if (now < last_now) throw Error(ErrorCode::clock_regression, "monotonic clock went backwards");
    last_now = now;
    if (now - deadline > result.max_lateness) result.max_lateness = now - deadline;
    if (now >= deadline_of(k + 1)) ++result.late_cycles;

    std::int64_t ts = (now - origin).count() / 1000;
    if (ts <= last_ts) ts = last_ts + 1;
    last_ts = ts;

    if (config.on_cycle) config.on_cycle(ts);
    admit_pending();

    Snapshot snap;
    snap.timestamp_us = ts;
    if (config.frame_source) last_frame = std::max(last_frame, config.frame_source());
    snap.frame = last_frame;
    snap.devices.reserve(active_.size());
    for (auto& slot : active_) {
      PollContext ctx(k, ts);
      auto record = slot->source.sample(ctx);
      ++slot->stats.polls;
      slot->stats.dropped += ctx.dropped();
      if (!record) continue;
      ++slot->stats.updates;
      record->device_id = slot->stats.device_id;
      record->name = slot->source.name;
      record->serial = slot->source.serial;
      snap.devices.push_back(std::move(*record));
    }
    emit(snap);
    ++result.snapshots;

    ++k;
  }

  if (duration_reached) clock.sleep_until(origin + *duration);
  const Nanos end = std::max(clock.now(), last_now);
  meta.end_time = meta.start_time + std::chrono::duration_cast<std::chrono::microseconds>(end - origin);

  {
    std::lock_guard lock(mutex_);
    finalized_ = true;
  }
  try {
    sink.finalize(meta);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::sink_failure, std::string("finalizing the recording failed: ") + e.what());
  }

  result.metadata = meta;
  admit_pending();
  for (const auto& slot : active_) result.devices.push_back(slot->stats);
  return result;
}

void LatchedSource::publish(DeviceRecord record) {
  std::lock_guard lock(state_->mutex);
  state_->latest = std::move(record);
  ++state_->published;
}

DeviceSource LatchedSource::source(std::string name, std::string serial) {
  return DeviceSource{
      std::move(name), std::move(serial),
      [state = state_](PollContext& ctx) -> std::optional<DeviceRecord> {
        std::lock_guard lock(state->mutex);
        if (state->published == state->consumed) return std::nullopt;
        ctx.note_dropped(state->published - state->consumed - 1);
        state->consumed = state->published;
        return state->latest;
      }};
}

}  // namespace oxdr::rec
