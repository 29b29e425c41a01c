#include "oxdr/validate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "oxdr/registry.hpp"

namespace oxdr {
namespace {

bool finite(double v) { return std::isfinite(v); }

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::optional<std::string> check_finite(std::initializer_list<double> values) {
  for (double v : values)
    if (!finite(v)) return std::string("non-finite component");
  return std::nullopt;
}

}  // namespace

std::size_t ValidationReport::count(std::string_view rule_id) const noexcept {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(),
      [&](const Violation& v) { return v.rule == rule_id; }));
}

std::optional<std::string> check_value(const FeatureValue& value) {
  return std::visit(
      overloaded{
          [](std::int64_t) -> std::optional<std::string> { return std::nullopt; },
          [](double v) { return check_finite({v}); },
          [](const Vector2& v) { return check_finite({v.x, v.y}); },
          [](const Vector3& v) { return check_finite({v.x, v.y, v.z}); },
          [](const Quaternion& q) { return check_finite({q.x, q.y, q.z, q.w}); },
          [](const Axis& a) -> std::optional<std::string> {
            if (auto bad = check_finite({a.value})) return bad;
            if (!in_range(a.value, -1, 1)) return "Axis value outside [-1, 1]";
            return std::nullopt;
          },
          [](const Button& b) -> std::optional<std::string> {
            if (auto bad = check_finite({b.value})) return bad;
            if (!in_range(b.value, 0, 1)) return "Button value outside [0, 1]";
            return std::nullopt;
          },
          [](const Key&) -> std::optional<std::string> { return std::nullopt; },
          [](const Stick& s) -> std::optional<std::string> {
            if (auto bad = check_finite({s.x, s.y})) return bad;
            if (!in_range(s.x, -1, 1) || !in_range(s.y, -1, 1))
              return "Stick component outside [-1, 1]";
            return std::nullopt;
          },
          [](const DPad&) -> std::optional<std::string> { return std::nullopt; },
          [](const Touch& t) -> std::optional<std::string> {
            if (auto bad = check_finite({t.position.x, t.position.y, t.pressure})) return bad;
            if (!in_range(t.pressure, 0, 1)) return "Touch pressure outside [0, 1]";
            return std::nullopt;
          },
          [](const Extension& e) -> std::optional<std::string> {
            if (e.type_name.empty()) return "Extension without type name";
            return std::nullopt;
          },
      },
      value);
}

void SequenceValidator::add(std::size_t index, std::string_view rule_id, std::string detail) {
  report_.violations.push_back(Violation{index, std::string(rule_id), std::move(detail)});
}

void SequenceValidator::feed(const Record& record) {
  const std::size_t index = index_++;
  report_.records = index_;
  if (const auto* meta = std::get_if<RecordingMetadata>(&record)) {
    if (seen_metadata_) {
      add(index, rule::duplicate_metadata, "second metadata record");
    } else if (index != 0) {
      add(0, rule::metadata_not_first, "metadata found at position " + std::to_string(index));
    }
    seen_metadata_ = true;
    check_metadata(*meta, index);
  } else {
    check_snapshot(std::get<Snapshot>(record), index);
  }
}

void SequenceValidator::check_metadata(const RecordingMetadata& meta, std::size_t index) {
  if (!(meta.polling_rate_hz > 0) || !std::isfinite(meta.polling_rate_hz))
    add(index, rule::invalid_polling_rate, "polling_rate_hz must be positive");
  if (meta.end_time && *meta.end_time < meta.start_time)
    add(index, rule::end_before_start, "end_time precedes start_time");
  const int present = int(meta.video_width.has_value()) + int(meta.video_height.has_value()) +
                      int(meta.video_filename.has_value());
  if (present != 0 && present != 3) {
    add(index, rule::video_fields_inconsistent,
        "video width/height/filename must be all present or all absent");
  } else if (present == 3 && (*meta.video_width <= 0 || *meta.video_height <= 0)) {
    add(index, rule::video_fields_inconsistent, "video dimensions must be positive");
  }
}

void SequenceValidator::check_snapshot(const Snapshot& snap, std::size_t index) {
  if (snap.timestamp_us < 0) add(index, rule::negative_timestamp, "ts_us < 0");
  if (snap.frame < 0) add(index, rule::negative_frame, "frame < 0");

  if (last_ts_ && snap.timestamp_us <= *last_ts_) {
    add(index, rule::non_monotonic_timestamp,
        "ts_us " + std::to_string(snap.timestamp_us) + " after " + std::to_string(*last_ts_));
  }
  if (last_frame_ && snap.frame < *last_frame_) {
    add(index, rule::frame_regression,
        "frame " + std::to_string(snap.frame) + " after " + std::to_string(*last_frame_));
  }
  last_ts_ = snap.timestamp_us;
  last_frame_ = snap.frame;

  std::set<std::int64_t> ids;
  for (const auto& dev : snap.devices) {
    if (!ids.insert(dev.device_id).second)
      add(index, rule::duplicate_device, "device id " + std::to_string(dev.device_id));

    std::set<std::string_view> names;
    for (const auto& feature : dev.features) {
      if (feature.name.empty())
        add(index, rule::empty_feature_name, "device " + dev.name);
      else if (!names.insert(feature.name).second)
        add(index, rule::duplicate_feature, dev.name + "." + feature.name);

      if (auto bad = check_value(feature.value)) {
        const bool non_finite = bad->starts_with("non-finite");
        add(index, non_finite ? rule::non_finite_value : rule::value_out_of_range,
            dev.name + "." + feature.name + ": " + *bad);
      }
      if (registry_) {
        if (const auto* ext = std::get_if<Extension>(&feature.value);
            ext && !registry_->contains(ext->type_name)) {
          add(index, rule::unregistered_extension, ext->type_name);
        }
      }
    }
  }
}

ValidationReport SequenceValidator::finish() {
  if (!seen_metadata_) add(0, rule::metadata_missing, "no metadata record");
  std::stable_sort(report_.violations.begin(), report_.violations.end(),
                   [](const Violation& a, const Violation& b) { return a.index < b.index; });
  return report_;
}

ValidationReport validate_record_sequence(std::span<const Record> records,
                                          const TypeRegistry* registry) {
  SequenceValidator validator(registry);
  for (const auto& r : records) validator.feed(r);
  return validator.finish();
}

}  // namespace oxdr
