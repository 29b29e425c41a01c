#include "oxdr/model.hpp"

#include <array>
#include <cmath>

#include "oxdr/error.hpp"

namespace oxdr {
namespace {

constexpr std::array<std::string_view, kValueTypeCount> kTypeTags = {
    "Integer", "Double", "Vector2", "Vector3", "Quaternion", "Axis",
    "Button",  "Key",    "Stick",   "DPad",    "Touch",      "Extension",
};

constexpr std::array<std::string_view, 5> kPhaseNames = {
    "none", "began", "moved", "ended", "canceled",
};

constexpr std::array<std::string_view, 5> kGenderNames = {
    "female", "male", "non_binary", "undisclosed", "self_described",
};

static_assert(std::variant_size_v<FeatureValue> == kValueTypeCount);

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::malformed_record: return "malformed_record";
    case ErrorCode::unknown_kind: return "unknown_kind";
    case ErrorCode::unknown_type: return "unknown_type";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::unregistered_extension: return "unregistered_extension";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::duplicate_name: return "duplicate_name";
    case ErrorCode::reserved_name: return "reserved_name";
    case ErrorCode::duplicate_device: return "duplicate_device";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::clock_regression: return "clock_regression";
    case ErrorCode::sink_failure: return "sink_failure";
    case ErrorCode::empty_table: return "empty_table";
    case ErrorCode::ambiguous_participant: return "ambiguous_participant";
    case ErrorCode::missing_participant: return "missing_participant";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

std::string_view to_string(TouchPhase phase) noexcept {
  return kPhaseNames[static_cast<std::size_t>(phase)];
}

std::optional<TouchPhase> parse_touch_phase(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i)
    if (kPhaseNames[i] == text) return static_cast<TouchPhase>(i);
  return std::nullopt;
}

ValueType type_of(const FeatureValue& value) noexcept {
  return static_cast<ValueType>(value.index());
}

std::string_view to_string(ValueType type) noexcept {
  return kTypeTags[static_cast<std::size_t>(type)];
}

std::optional<ValueType> parse_value_type(std::string_view tag) noexcept {
  for (std::size_t i = 0; i < kTypeTags.size(); ++i)
    if (kTypeTags[i] == tag) return static_cast<ValueType>(i);
  return std::nullopt;
}

bool is_builtin_tag(std::string_view tag) noexcept {
  return parse_value_type(tag).has_value();
}

const Feature* DeviceRecord::find(std::string_view feature_name) const noexcept {
  for (const auto& f : features)
    if (f.name == feature_name) return &f;
  return nullptr;
}

const DeviceRecord* Snapshot::find(std::int64_t id) const noexcept {
  for (const auto& d : devices)
    if (d.device_id == id) return &d;
  return nullptr;
}

void RecordingMetadata::set_video(const VideoInfo& video) {
  video_width = video.width;
  video_height = video.height;
  video_filename = video.filename;
}

std::optional<VideoInfo> RecordingMetadata::video() const {
  if (!video_width || !video_height || !video_filename) return std::nullopt;
  return VideoInfo{*video_width, *video_height, *video_filename};
}

std::string_view to_string(Gender g) noexcept {
  return kGenderNames[static_cast<std::size_t>(g)];
}

std::optional<Gender> parse_gender(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kGenderNames.size(); ++i)
    if (kGenderNames[i] == text) return static_cast<Gender>(i);
  return std::nullopt;
}

std::optional<std::string> check(const DemographicsResponse& r) {
  if (r.participant_id.empty()) return "participant_id is empty";
  if (r.age_years <= 0) return "age_years must be positive";
  if (r.vr_experience < 0 || r.vr_experience > kVrExperienceMax)
    return "vr_experience must be within [0, 7]";
  if (r.gender == Gender::self_described && r.gender_text.empty())
    return "self_described gender requires a description";
  return std::nullopt;
}

}  // namespace oxdr
