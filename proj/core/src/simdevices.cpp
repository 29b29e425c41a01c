#include "oxdr/simdevices.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "oxdr/error.hpp"

namespace oxdr::sim {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double frac(double x) { return x - std::floor(x); }

// Tracks the device's internal sample clock across polls.
class NativeClock {
 public:
  explicit NativeClock(double rate_hz) : rate_(rate_hz) {}

  // Latest native sample index at poll time, or nullopt if no new sample
  // arrived since the previous poll.
  std::optional<std::int64_t> poll(rec::PollContext& ctx) {
    const auto index = static_cast<std::int64_t>(
        std::floor(static_cast<double>(ctx.ts_us()) * rate_ / 1e6 + 1e-9));
    if (last_ && index <= *last_) return std::nullopt;
    if (last_ && index > *last_ + 1) ctx.note_dropped(static_cast<std::uint64_t>(index - *last_ - 1));
    last_ = index;
    return index;
  }

  std::int64_t sample_time_us(std::int64_t index) const {
    return std::llround(static_cast<double>(index) * 1e6 / rate_);
  }

 private:
  double rate_;
  std::optional<std::int64_t> last_;
};

DeviceRecord pose_record(const SimSpec& spec, std::int64_t ts_us, double t) {
  DeviceRecord rec;
  rec.device_timestamp_us = ts_us;
  rec.features.push_back({"position", position_at(spec, t)});
  rec.features.push_back({"rotation", rotation_at(spec, t)});
  return rec;
}

}  // namespace

std::string_view to_string(DeviceKind kind) noexcept {
  switch (kind) {
    case DeviceKind::hmd: return "hmd";
    case DeviceKind::controller: return "controller";
    case DeviceKind::eye_tracker: return "eye_tracker";
  }
  return "hmd";
}

std::optional<DeviceKind> parse_device_kind(std::string_view text) noexcept {
  if (text == "hmd") return DeviceKind::hmd;
  if (text == "controller") return DeviceKind::controller;
  if (text == "eye_tracker") return DeviceKind::eye_tracker;
  return std::nullopt;
}

std::optional<std::string> SimSpec::check() const {
  if (!(native_rate_hz > 0) || !std::isfinite(native_rate_hz))
    return "native_rate_hz must be positive";
  for (double v : {amplitude.x, amplitude.y, amplitude.z, frequency_hz, phase_rad, rotation_hz,
                   pupil_hz, button_duty, touch_segment_s}) {
    if (!std::isfinite(v)) return "signal parameters must be finite";
  }
  if (button_duty < 0 || button_duty > 1) return "button_duty must be within [0, 1]";
  if (!(touch_segment_s > 0)) return "touch_segment_s must be positive";
  return std::nullopt;
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
  const std::uint64_t h = splitmix64(splitmix64(seed ^ splitmix64(stream)) + counter);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Vector3 position_at(const SimSpec& s, double t) {
  const double a = kTwoPi * s.frequency_hz * t + s.phase_rad;
  return {s.amplitude.x * std::sin(a), s.amplitude.y * std::sin(2 * a),
          s.amplitude.z * std::cos(a)};
}

Quaternion rotation_at(const SimSpec& s, double t) {
  const double half = 0.5 * kTwoPi * s.rotation_hz * t;
  return {0.0, std::sin(half), 0.0, std::cos(half)};
}

Vector3 gaze_at(const SimSpec& s, double t) {
  const double a = kTwoPi * s.frequency_hz * t + s.phase_rad;
  const double yaw = s.amplitude.x * std::sin(a);
  const double pitch = s.amplitude.y * std::sin(2 * a);
  return {std::cos(pitch) * std::sin(yaw), std::sin(pitch), std::cos(pitch) * std::cos(yaw)};
}

double pupil_at(const SimSpec& s, double t) {
  return 5.0 + 3.0 * std::sin(kTwoPi * s.pupil_hz * t);
}

// Square wave per button: period in [0.4, 1.2) s and a phase offset drawn
// from the counter generator. The offset is below (1 - duty), so every wave
// starts in its low state at t = 0.
Button button_at(const SimSpec& s, std::size_t button, double t) {
  const double period = 0.4 + 0.8 * counter_uniform(s.seed, button, 0);
  const double offset = counter_uniform(s.seed, button, 1) * (1.0 - s.button_duty);
  const double phase = frac(t / period + offset);
  const double high_from = 1.0 - s.button_duty;
  if (s.button_duty <= 0 || phase < high_from) return Button{0.0, false};
  const bool analog = button >= 3;  // the two triggers
  double value = 1.0;
  if (analog) {
    const double within = (phase - high_from) / s.button_duty;
    value = 0.5 + 0.5 * std::sin(std::numbers::pi * within);
  }
  return Button{value, value >= 0.5};
}

bool touching_at(const SimSpec& s, double t) {
  const auto segment = static_cast<std::int64_t>(std::floor(t / s.touch_segment_s));
  if (segment <= 0) return false;
  return counter_uniform(s.seed, 100, static_cast<std::uint64_t>(segment)) < 0.5;
}

rec::DeviceSource make_sim_hmd(const SimSpec& spec, std::string name, std::string serial) {
  auto clock = std::make_shared<NativeClock>(spec.native_rate_hz);
  return {std::move(name), std::move(serial),
          [spec, clock](rec::PollContext& ctx) -> std::optional<DeviceRecord> {
            auto index = clock->poll(ctx);
            if (!index) return std::nullopt;
            const auto ts = clock->sample_time_us(*index);
            return pose_record(spec, ts, static_cast<double>(ts) * 1e-6);
          }};
}

rec::DeviceSource make_sim_controller(const SimSpec& spec, std::string name,
                                      std::string serial) {
  struct State {
    explicit State(double rate) : clock(rate) {}
    NativeClock clock;
    bool was_touching = false;
    std::int64_t touch_id = 0;
  };
  auto state = std::make_shared<State>(spec.native_rate_hz);
  return {std::move(name), std::move(serial),
          [spec, state](rec::PollContext& ctx) -> std::optional<DeviceRecord> {
            auto index = state->clock.poll(ctx);
            if (!index) return std::nullopt;
            const auto ts = state->clock.sample_time_us(*index);
            const double t = static_cast<double>(ts) * 1e-6;

            DeviceRecord rec;
            rec.device_timestamp_us = ts;
            for (std::size_t i = 0; i < kControllerButtons.size(); ++i)
              rec.features.push_back({std::string(kControllerButtons[i]), button_at(spec, i, t)});

            Touch touch;
            const bool touching = touching_at(spec, t);
            if (touching && !state->was_touching) {
              state->touch_id = static_cast<std::int64_t>(std::floor(t / spec.touch_segment_s));
              touch.phase = TouchPhase::began;
            } else if (touching) {
              touch.phase = TouchPhase::moved;
            } else if (state->was_touching) {
              touch.phase = TouchPhase::ended;
            }
            touch.touch_id = state->touch_id;
            if (touching) {
              touch.position = {0.5 * std::cos(kTwoPi * 0.7 * t), 0.5 * std::sin(kTwoPi * 0.7 * t)};
              touch.pressure = 0.5 + 0.25 * std::sin(kTwoPi * 0.3 * t);
            }
            state->was_touching = touching;
            rec.features.push_back({"touchpad", touch});
            rec.features.push_back({"position", position_at(spec, t)});
            rec.features.push_back({"rotation", rotation_at(spec, t)});
            return rec;
          }};
}

rec::DeviceSource make_sim_eye_tracker(const SimSpec& spec, std::string name,
                                       std::string serial) {
  auto clock = std::make_shared<NativeClock>(spec.native_rate_hz);
  return {std::move(name), std::move(serial),
          [spec, clock](rec::PollContext& ctx) -> std::optional<DeviceRecord> {
            auto index = clock->poll(ctx);
            if (!index) return std::nullopt;
            const auto ts = clock->sample_time_us(*index);
            const double t = static_cast<double>(ts) * 1e-6;
            DeviceRecord rec;
            rec.device_timestamp_us = ts;
            rec.features.push_back({"gaze_direction", gaze_at(spec, t)});
            rec.features.push_back({"pupil_diameter_mm", pupil_at(spec, t)});
            return rec;
          }};
}

rec::DeviceSource make_sim_device(const SimSpec& spec, std::string name, std::string serial) {
  if (auto bad = spec.check()) throw Error(ErrorCode::invalid_argument, *bad);
  switch (spec.kind) {
    case DeviceKind::hmd: return make_sim_hmd(spec, std::move(name), std::move(serial));
    case DeviceKind::controller:
      return make_sim_controller(spec, std::move(name), std::move(serial));
    case DeviceKind::eye_tracker:
      return make_sim_eye_tracker(spec, std::move(name), std::move(serial));
  }
  throw Error(ErrorCode::invalid_argument, "unknown device kind");
}

FrameSchedule::FrameSchedule(double rate_hz, std::vector<FrameStall> stalls)
    : rate_hz_(rate_hz), stalls_(std::move(stalls)) {
  if (!(rate_hz_ > 0) || !std::isfinite(rate_hz_))
    throw Error(ErrorCode::invalid_argument, "frame rate must be positive");
  for (const auto& s : stalls_) {
    if (!(s.duration_s >= 0) || !(s.at_s >= 0))
      throw Error(ErrorCode::invalid_argument, "frame stalls need non-negative times");
  }
  std::sort(stalls_.begin(), stalls_.end(),
            [](const FrameStall& a, const FrameStall& b) { return a.at_s < b.at_s; });
}

std::int64_t FrameSchedule::frame_at(std::int64_t ts_us) const {
  const double t = static_cast<double>(ts_us) * 1e-6;
  // Render time excludes the stalled spans that began before t.
  double paused = 0;
  for (const auto& s : stalls_) {
    if (t <= s.at_s) break;
    paused += std::min(t - s.at_s, s.duration_s);
  }
  return static_cast<std::int64_t>(std::floor((t - paused) * rate_hz_ + 1e-9));
}

}  // namespace oxdr::sim
