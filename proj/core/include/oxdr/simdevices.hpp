#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oxdr/model.hpp"
#include "oxdr/recorder.hpp"

namespace oxdr::sim {

enum class DeviceKind { hmd, controller, eye_tracker };

std::string_view to_string(DeviceKind kind) noexcept;
std::optional<DeviceKind> parse_device_kind(std::string_view text) noexcept;

/// Parameters of one synthetic device. All numeric signals are closed-form
/// functions of the sample time t (seconds since recording start):
///
///   position(t) = (A.x sin(wt+p), A.y sin(2(wt+p)), A.z cos(wt+p)),  w = 2*pi*frequency_hz
///   rotation(t) = yaw about +Y by 2*pi*rotation_hz*t
///   gaze(t)     = unit vector at yaw A.x sin(wt+p), pitch A.y sin(2(wt+p))  (radians)
///   pupil(t)    = 5 + 3 sin(2*pi*pupil_hz*t)  mm
///
/// The device samples internally at native_rate_hz and reports its most
/// recent sample when polled.
struct SimSpec {
  std::uint64_t seed = 42;
  DeviceKind kind = DeviceKind::hmd;
  double native_rate_hz = 100.0;
  Vector3 amplitude{1.0, 1.0, 1.0};
  double frequency_hz = 0.5;
  double phase_rad = 0.0;
  double rotation_hz = 0.1;
  // Controller only.
  double button_duty = 0.3;
  double touch_segment_s = 0.75;
  // Eye tracker only.
  double pupil_hz = 0.05;

  /// First violated invariant, if any.
  std::optional<std::string> check() const;
};

inline constexpr std::array<std::string_view, 5> kControllerButtons = {
    "button_a", "button_b", "button_menu", "trigger_index", "trigger_grip",
};

// Closed-form signals, exposed for analysis and tests.
Vector3 position_at(const SimSpec& spec, double t);
Quaternion rotation_at(const SimSpec& spec, double t);
Vector3 gaze_at(const SimSpec& spec, double t);
double pupil_at(const SimSpec& spec, double t);
Button button_at(const SimSpec& spec, std::size_t button, double t);
/// Whether the touchpad is in contact during time t.
bool touching_at(const SimSpec& spec, double t);

/// Counter-based uniform draw in [0, 1): a pure function of its arguments.
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept;

/// Features: "position" (Vector3), "rotation" (Quaternion).
rec::DeviceSource make_sim_hmd(const SimSpec& spec, std::string name = "SimHMD",
                               std::string serial = "SIM-HMD-0001");

/// Features: five Buttons (kControllerButtons), "touchpad" (Touch),
/// "position" (Vector3), "rotation" (Quaternion).
rec::DeviceSource make_sim_controller(const SimSpec& spec,
                                      std::string name = "SimController",
                                      std::string serial = "SIM-CTL-0001");

/// Features: "gaze_direction" (unit Vector3), "pupil_diameter_mm" (Double).
rec::DeviceSource make_sim_eye_tracker(const SimSpec& spec,
                                       std::string name = "SimEyeTracker",
                                       std::string serial = "SIM-EYE-0001");

rec::DeviceSource make_sim_device(const SimSpec& spec, std::string name, std::string serial);

/// A render pause: no new frames between at_s and at_s + duration_s.
struct FrameStall {
  double at_s = 0;
  double duration_s = 0;
};

/// Simulated host frame counter: frames advance at rate_hz except during
/// stalls, after which counting resumes from where it stopped.
class FrameSchedule {
 public:
  explicit FrameSchedule(double rate_hz, std::vector<FrameStall> stalls = {});

  std::int64_t frame_at(std::int64_t ts_us) const;

 private:
  double rate_hz_;
  std::vector<FrameStall> stalls_;
};

// ---------------------------------------------------------------------------
// Session description file (".simspec")
// ---------------------------------------------------------------------------

struct SimDeviceEntry {
  std::string label;  // from the section header
  std::string name;
  std::string serial;
  SimSpec spec;
  double register_at_s = 0;  // late registration offset
};

struct SessionSpec {
  RecordingMetadata metadata;      // polling_rate_hz is filled in by the recorder
  std::optional<UtcTime> start_time;  // fixed start for reproducible files
  double frame_rate_hz = 72.0;        // simulated host render rate
  std::vector<SimDeviceEntry> devices;
};

/// Parses the key-value text format:
///
///   # comment
///   [session]
///   start_time = 2025-01-01T00:00:00.000000Z
///   participant_id = P007
///   [device hmd]
///   kind = hmd
///   amplitude = 1 1 1
///
/// Throws Error(invalid_argument) with "<origin>:<line>: ..." on bad input.
SessionSpec parse_session_spec(std::string_view text, std::string_view origin = "<spec>");

/// Reads and parses a file. Throws Error(io) naming the path if unreadable.
SessionSpec load_session_spec(const std::filesystem::path& path);

/// The built-in session: one HMD, one controller and one eye tracker.
SessionSpec default_session_spec();

/// Canonical text of a session spec; parse_session_spec accepts it.
std::string format_session_spec(const SessionSpec& spec);

}  // namespace oxdr::sim
