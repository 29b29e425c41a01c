#pragma once

// Mapping between the record model and the wire tree shared by both
// encodings. Key names here are normative for the file format.

#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include <nlohmann/json.hpp>

#include "oxdr/codec.hpp"
#include "oxdr/error.hpp"
#include "oxdr/model.hpp"
#include "oxdr/time.hpp"

namespace oxdr::detail {

using codec::DecodeOptions;
using codec::EncodeOptions;
using codec::ExtensionPolicy;

namespace key {
inline constexpr std::string_view kind = "kind";
inline constexpr std::string_view frame = "frame";
inline constexpr std::string_view ts_us = "ts_us";
inline constexpr std::string_view devices = "devices";
inline constexpr std::string_view id = "id";
inline constexpr std::string_view name = "name";
inline constexpr std::string_view serial = "serial";
inline constexpr std::string_view dev_ts_us = "dev_ts_us";
inline constexpr std::string_view features = "features";
inline constexpr std::string_view type = "type";
inline constexpr std::string_view ext = "ext";
inline constexpr std::string_view value = "value";
}  // namespace key

inline constexpr std::string_view kKindMeta = "meta";
inline constexpr std::string_view kKindSnap = "snap";

// Throws Error(invalid_argument) if `text` is not valid UTF-8.
void require_utf8(std::string_view text, std::string_view what);

// Rejects NaN/Inf with Error(non_finite).
void require_finite(double v, std::string_view what);

// Checks the Extension is encodable under the given options.
void require_encodable(const Extension& ext, const EncodeOptions& options);

template <class W>
void write_metadata(W& w, const RecordingMetadata& m) {
  require_finite(m.polling_rate_hz, "polling_rate_hz");
  w.begin_map(14);
  w.key(key::kind);
  w.string(kKindMeta);
  w.key("format_version");
  w.string(m.format_version);
  w.key("start_time");
  w.string(format_utc(m.start_time));
  w.key("end_time");
  if (m.end_time) w.string(format_utc(*m.end_time)); else w.null();
  w.key("polling_rate_hz");
  w.real(m.polling_rate_hz);
  w.key("video_width");
  if (m.video_width) w.integer(*m.video_width); else w.null();
  w.key("video_height");
  if (m.video_height) w.integer(*m.video_height); else w.null();
  w.key("video_filename");
  if (m.video_filename) w.string(*m.video_filename); else w.null();
  w.key("hmd_name");
  w.string(m.hmd_name);
  w.key("hmd_serial");
  w.string(m.hmd_serial);
  w.key("storage_medium");
  w.string(m.storage_medium);
  w.key("participant_id");
  w.string(m.participant_id);
  w.key("consent_recorded");
  w.boolean(m.consent_recorded);
  w.key("session_label");
  w.string(m.session_label);
  w.end_map();
}

template <class W>
void write_vec(W& w, std::initializer_list<double> values, std::string_view what) {
  w.begin_array(values.size());
  for (double v : values) {
    require_finite(v, what);
    w.real(v);
  }
  w.end_array();
}

template <class W>
void write_value(W& w, const FeatureValue& value, std::string_view what) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::int64_t>) {
          w.integer(v);
        } else if constexpr (std::is_same_v<T, double>) {
          require_finite(v, what);
          w.real(v);
        } else if constexpr (std::is_same_v<T, Vector2>) {
          write_vec(w, {v.x, v.y}, what);
        } else if constexpr (std::is_same_v<T, Vector3>) {
          write_vec(w, {v.x, v.y, v.z}, what);
        } else if constexpr (std::is_same_v<T, Quaternion>) {
          write_vec(w, {v.x, v.y, v.z, v.w}, what);
        } else if constexpr (std::is_same_v<T, Axis>) {
          require_finite(v.value, what);
          w.real(v.value);
        } else if constexpr (std::is_same_v<T, Button>) {
          require_finite(v.value, what);
          w.begin_map(2);
          w.key("value");
          w.real(v.value);
          w.key("pressed");
          w.boolean(v.pressed);
          w.end_map();
        } else if constexpr (std::is_same_v<T, Key>) {
          w.begin_map(2);
          w.key("code");
          w.integer(v.code);
          w.key("pressed");
          w.boolean(v.pressed);
          w.end_map();
        } else if constexpr (std::is_same_v<T, Stick>) {
          write_vec(w, {v.x, v.y}, what);
        } else if constexpr (std::is_same_v<T, DPad>) {
          w.begin_map(4);
          w.key("up");
          w.boolean(v.up);
          w.key("down");
          w.boolean(v.down);
          w.key("left");
          w.boolean(v.left);
          w.key("right");
          w.boolean(v.right);
          w.end_map();
        } else if constexpr (std::is_same_v<T, Touch>) {
          require_finite(v.pressure, what);
          w.begin_map(4);
          w.key("id");
          w.integer(v.touch_id);
          w.key("position");
          write_vec(w, {v.position.x, v.position.y}, what);
          w.key("pressure");
          w.real(v.pressure);
          w.key("phase");
          w.string(to_string(v.phase));
          w.end_map();
        } else {
          static_assert(std::is_same_v<T, Extension>);
          w.bytes(v.payload);
        }
      },
      value);
}

template <class W>
void write_snapshot(W& w, const Snapshot& s, const EncodeOptions& options) {
  w.begin_map(4);
  w.key(key::kind);
  w.string(kKindSnap);
  w.key(key::frame);
  w.integer(s.frame);
  w.key(key::ts_us);
  w.integer(s.timestamp_us);
  w.key(key::devices);
  w.begin_array(s.devices.size());
  for (const auto& d : s.devices) {
    require_utf8(d.name, "device name");
    require_utf8(d.serial, "device serial");
    w.begin_map(5);
    w.key(key::id);
    w.integer(d.device_id);
    w.key(key::name);
    w.string(d.name);
    w.key(key::serial);
    w.string(d.serial);
    w.key(key::dev_ts_us);
    w.integer(d.device_timestamp_us);
    w.key(key::features);
    w.begin_array(d.features.size());
    for (const auto& f : d.features) {
      require_utf8(f.name, "feature name");
      const auto* ext = std::get_if<Extension>(&f.value);
      if (ext) require_encodable(*ext, options);
      w.begin_map(ext ? 4 : 3);
      w.key(key::name);
      w.string(f.name);
      w.key(key::type);
      w.string(to_string(type_of(f.value)));
      if (ext) {
        w.key(key::ext);
        w.string(ext->type_name);
      }
      w.key(key::value);
      write_value(w, f.value, f.name);
      w.end_map();
    }
    w.end_array();
    w.end_map();
  }
  w.end_array();
  w.end_map();
}

template <class W>
void write_record(W& w, const Record& record, const EncodeOptions& options) {
  if (const auto* m = std::get_if<RecordingMetadata>(&record)) {
    for (auto* s : {&m->format_version, &m->hmd_name, &m->hmd_serial, &m->storage_medium,
                    &m->participant_id, &m->session_label})
      require_utf8(*s, "metadata string");
    if (m->video_filename) require_utf8(*m->video_filename, "video_filename");
    write_metadata(w, *m);
  } else {
    write_snapshot(w, std::get<Snapshot>(record), options);
  }
}

// Thrown while mapping a tree to a record; the codec attaches position info.
struct TreeError {
  ErrorCode code;
  std::string message;
};

Record record_from_tree(const nlohmann::json& tree, const DecodeOptions& options);

}  // namespace oxdr::detail
