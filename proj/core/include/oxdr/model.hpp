#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "oxdr/time.hpp"

namespace oxdr {

inline constexpr std::string_view kFormatVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Feature values
// ---------------------------------------------------------------------------

struct Vector2 {
  double x = 0, y = 0;
  friend bool operator==(const Vector2&, const Vector2&) = default;
};

struct Vector3 {
  double x = 0, y = 0, z = 0;
  friend bool operator==(const Vector3&, const Vector3&) = default;
};

struct Quaternion {
  double x = 0, y = 0, z = 0, w = 1;
  friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

struct Axis {
  double value = 0;  // [-1, 1]
  friend bool operator==(const Axis&, const Axis&) = default;
};

struct Button {
  double value = 0;  // [0, 1]
  bool pressed = false;
  friend bool operator==(const Button&, const Button&) = default;
};

struct Key {
  std::int64_t code = 0;
  bool pressed = false;
  friend bool operator==(const Key&, const Key&) = default;
};

struct Stick {
  double x = 0, y = 0;  // each [-1, 1]
  friend bool operator==(const Stick&, const Stick&) = default;
};

struct DPad {
  bool up = false, down = false, left = false, right = false;
  friend bool operator==(const DPad&, const DPad&) = default;
};

enum class TouchPhase { none, began, moved, ended, canceled };

std::string_view to_string(TouchPhase phase) noexcept;
std::optional<TouchPhase> parse_touch_phase(std::string_view text) noexcept;

struct Touch {
  std::int64_t touch_id = 0;
  Vector2 position;
  double pressure = 0;  // [0, 1]
  TouchPhase phase = TouchPhase::none;
  friend bool operator==(const Touch&, const Touch&) = default;
};

/// User-defined value. The payload is opaque to the format; its type_name must
/// be known to a TypeRegistry to be encoded, and to be decoded in strict mode.
struct Extension {
  std::string type_name;
  std::vector<std::byte> payload;
  friend bool operator==(const Extension&, const Extension&) = default;
};

using FeatureValue = std::variant<std::int64_t, double, Vector2, Vector3, Quaternion,
                                  Axis, Button, Key, Stick, DPad, Touch, Extension>;

/// Closed set of type tags. Order matches the FeatureValue alternatives.
enum class ValueType {
  Integer,
  Double,
  Vector2,
  Vector3,
  Quaternion,
  Axis,
  Button,
  Key,
  Stick,
  DPad,
  Touch,
  Extension,
};

inline constexpr std::size_t kValueTypeCount = 12;

ValueType type_of(const FeatureValue& value) noexcept;
std::string_view to_string(ValueType type) noexcept;
std::optional<ValueType> parse_value_type(std::string_view tag) noexcept;
bool is_builtin_tag(std::string_view tag) noexcept;

// ---------------------------------------------------------------------------
// Record hierarchy
// ---------------------------------------------------------------------------

struct Feature {
  std::string name;
  FeatureValue value;
  friend bool operator==(const Feature&, const Feature&) = default;
};

struct DeviceRecord {
  std::int64_t device_id = 0;
  std::string name;
  std::string serial;
  std::int64_t device_timestamp_us = 0;
  std::vector<Feature> features;

  const Feature* find(std::string_view feature_name) const noexcept;

  friend bool operator==(const DeviceRecord&, const DeviceRecord&) = default;
};

struct Snapshot {
  std::int64_t frame = 0;
  std::int64_t timestamp_us = 0;  // relative to RecordingMetadata::start_time
  std::vector<DeviceRecord> devices;

  const DeviceRecord* find(std::int64_t device_id) const noexcept;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct VideoInfo {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::string filename;
  friend bool operator==(const VideoInfo&, const VideoInfo&) = default;
};

struct RecordingMetadata {
  std::string format_version{kFormatVersion};
  UtcTime start_time{};
  std::optional<UtcTime> end_time;
  double polling_rate_hz = 0;
  // The three video fields travel together. Decoders keep what they read so
  // the validator can report a half-populated set.
  std::optional<std::int64_t> video_width;
  std::optional<std::int64_t> video_height;
  std::optional<std::string> video_filename;
  std::string hmd_name;
  std::string hmd_serial;
  std::string storage_medium;
  std::string participant_id;
  bool consent_recorded = false;
  std::string session_label;

  void set_video(const VideoInfo& video);
  std::optional<VideoInfo> video() const;

  friend bool operator==(const RecordingMetadata&, const RecordingMetadata&) = default;
};

using Record = std::variant<RecordingMetadata, Snapshot>;

inline bool is_metadata(const Record& r) noexcept {
  return std::holds_alternative<RecordingMetadata>(r);
}

// ---------------------------------------------------------------------------
// Questionnaire
// ---------------------------------------------------------------------------

enum class Gender { female, male, non_binary, undisclosed, self_described };

std::string_view to_string(Gender g) noexcept;
std::optional<Gender> parse_gender(std::string_view text) noexcept;

/// Answers to the standardized demographics questionnaire. vr_experience is
/// the 0-based index on the 8-point scale from "no experience" (0) to
/// "daily VR user" (7).
struct DemographicsResponse {
  std::string participant_id;
  std::int64_t age_years = 0;
  Gender gender = Gender::undisclosed;
  std::string gender_text;
  std::string native_language;
  bool vision_correction = false;
  std::int64_t vr_experience = 0;

  friend bool operator==(const DemographicsResponse&,
                         const DemographicsResponse&) = default;
};

inline constexpr std::int64_t kVrExperienceMax = 7;

/// Returns the first invariant violated by the response, if any.
std::optional<std::string> check(const DemographicsResponse& response);

}  // namespace oxdr
