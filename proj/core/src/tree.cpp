#include "tree.hpp"

#include <cmath>
#include <limits>

#include "base64.hpp"

namespace oxdr::detail {
namespace {

using json = nlohmann::json;

[[noreturn]] void malformed(std::string msg) {
  throw TreeError{ErrorCode::malformed_record, std::move(msg)};
}

const json& field(const json& obj, std::string_view k) {
  auto it = obj.find(k);
  if (it == obj.end()) malformed("missing key '" + std::string(k) + "'");
  return *it;
}

const json* optional_field(const json& obj, std::string_view k) {
  auto it = obj.find(k);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

std::int64_t as_int(const json& v, std::string_view what) {
  if (v.is_number_integer()) {
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
        malformed(std::string(what) + " does not fit a signed 64-bit integer");
      return static_cast<std::int64_t>(u);
    }
    return v.get<std::int64_t>();
  }
  malformed(std::string(what) + " must be an integer");
}

double as_double(const json& v, std::string_view what) {
  if (v.is_number_float()) return v.get<double>();
  if (v.is_number_unsigned()) return static_cast<double>(v.get<std::uint64_t>());
  if (v.is_number_integer()) return static_cast<double>(v.get<std::int64_t>());
  malformed(std::string(what) + " must be a number");
}

bool as_bool(const json& v, std::string_view what) {
  if (!v.is_boolean()) malformed(std::string(what) + " must be a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, std::string_view what) {
  if (!v.is_string()) malformed(std::string(what) + " must be a string");
  return v.get<std::string>();
}

UtcTime as_time(const json& v, std::string_view what) {
  try {
    return parse_utc(as_string(v, what));
  } catch (const Error& e) {
    malformed(std::string(what) + ": " + e.what());
  }
}

template <std::size_t N>
std::array<double, N> as_vec(const json& v, std::string_view what) {
  if (!v.is_array() || v.size() != N)
    malformed(std::string(what) + " must be an array of " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = as_double(v[i], what);
  return out;
}

std::vector<std::byte> as_bytes(const json& v, std::string_view what) {
  if (v.is_binary()) {
    const auto& bin = v.get_binary();
    std::vector<std::byte> out(bin.size());
    for (std::size_t i = 0; i < bin.size(); ++i) out[i] = static_cast<std::byte>(bin[i]);
    return out;
  }
  if (v.is_string()) {
    auto decoded = base64_decode(v.get_ref<const std::string&>());
    if (!decoded) malformed(std::string(what) + " is not valid base64");
    return std::move(*decoded);
  }
  malformed(std::string(what) + " must be binary or base64 text");
}

void require_object(const json& v, std::string_view what) {
  if (!v.is_object()) malformed(std::string(what) + " must be an object");
}

FeatureValue value_from_tree(ValueType type, const json& feature, const json& v,
                             const DecodeOptions& options) {
  switch (type) {
    case ValueType::Integer: return as_int(v, "Integer value");
    case ValueType::Double: return as_double(v, "Double value");
    case ValueType::Vector2: {
      auto a = as_vec<2>(v, "Vector2 value");
      return Vector2{a[0], a[1]};
    }
    case ValueType::Vector3: {
      auto a = as_vec<3>(v, "Vector3 value");
      return Vector3{a[0], a[1], a[2]};
    }
    case ValueType::Quaternion: {
      auto a = as_vec<4>(v, "Quaternion value");
      return Quaternion{a[0], a[1], a[2], a[3]};
    }
    case ValueType::Axis: return Axis{as_double(v, "Axis value")};
    case ValueType::Button:
      require_object(v, "Button value");
      return Button{as_double(field(v, "value"), "Button.value"),
                    as_bool(field(v, "pressed"), "Button.pressed")};
    case ValueType::Key:
      require_object(v, "Key value");
      return Key{as_int(field(v, "code"), "Key.code"),
                 as_bool(field(v, "pressed"), "Key.pressed")};
    case ValueType::Stick: {
      auto a = as_vec<2>(v, "Stick value");
      return Stick{a[0], a[1]};
    }
    case ValueType::DPad:
      require_object(v, "DPad value");
      return DPad{as_bool(field(v, "up"), "DPad.up"), as_bool(field(v, "down"), "DPad.down"),
                  as_bool(field(v, "left"), "DPad.left"),
                  as_bool(field(v, "right"), "DPad.right")};
    case ValueType::Touch: {
      require_object(v, "Touch value");
      auto pos = as_vec<2>(field(v, "position"), "Touch.position");
      auto phase_text = as_string(field(v, "phase"), "Touch.phase");
      auto phase = parse_touch_phase(phase_text);
      if (!phase) malformed("unknown Touch phase '" + phase_text + "'");
      return Touch{as_int(field(v, "id"), "Touch.id"), Vector2{pos[0], pos[1]},
                   as_double(field(v, "pressure"), "Touch.pressure"), *phase};
    }
    case ValueType::Extension: {
      Extension ext{as_string(field(feature, key::ext), "Extension type"),
                    as_bytes(v, "Extension payload")};
      if (options.extensions == ExtensionPolicy::strict) {
        const auto& registry = options.registry ? *options.registry : TypeRegistry::global();
        try {
          registry.decode(ext);
        } catch (const Error& e) {
          throw TreeError{e.code(), e.what()};
        } catch (const std::exception& e) {
          malformed("extension '" + ext.type_name + "' payload rejected: " + e.what());
        }
      }
      return ext;
    }
  }
  malformed("unhandled value type");
}

RecordingMetadata metadata_from_tree(const json& t) {
  RecordingMetadata m;
  m.format_version = as_string(field(t, "format_version"), "format_version");
  m.start_time = as_time(field(t, "start_time"), "start_time");
  if (const auto* v = optional_field(t, "end_time")) m.end_time = as_time(*v, "end_time");
  m.polling_rate_hz = as_double(field(t, "polling_rate_hz"), "polling_rate_hz");
  if (const auto* v = optional_field(t, "video_width")) m.video_width = as_int(*v, "video_width");
  if (const auto* v = optional_field(t, "video_height"))
    m.video_height = as_int(*v, "video_height");
  if (const auto* v = optional_field(t, "video_filename"))
    m.video_filename = as_string(*v, "video_filename");
  m.hmd_name = as_string(field(t, "hmd_name"), "hmd_name");
  m.hmd_serial = as_string(field(t, "hmd_serial"), "hmd_serial");
  m.storage_medium = as_string(field(t, "storage_medium"), "storage_medium");
  m.participant_id = as_string(field(t, "participant_id"), "participant_id");
  m.consent_recorded = as_bool(field(t, "consent_recorded"), "consent_recorded");
  m.session_label = as_string(field(t, "session_label"), "session_label");
  return m;
}

Snapshot snapshot_from_tree(const json& t, const DecodeOptions& options) {
  Snapshot s;
  s.frame = as_int(field(t, key::frame), "frame");
  s.timestamp_us = as_int(field(t, key::ts_us), "ts_us");
  const auto& devices = field(t, key::devices);
  if (!devices.is_array()) malformed("devices must be an array");
  s.devices.reserve(devices.size());
  for (const auto& d : devices) {
    require_object(d, "device");
    DeviceRecord dev;
    dev.device_id = as_int(field(d, key::id), "device id");
    dev.name = as_string(field(d, key::name), "device name");
    dev.serial = as_string(field(d, key::serial), "device serial");
    dev.device_timestamp_us = as_int(field(d, key::dev_ts_us), "dev_ts_us");
    const auto& features = field(d, key::features);
    if (!features.is_array()) malformed("features must be an array");
    dev.features.reserve(features.size());
    for (const auto& f : features) {
      require_object(f, "feature");
      auto tag = as_string(field(f, key::type), "feature type");
      auto type = parse_value_type(tag);
      if (!type) throw TreeError{ErrorCode::unknown_type, "unknown value type '" + tag + "'"};
      dev.features.push_back(Feature{as_string(field(f, key::name), "feature name"),
                                     value_from_tree(*type, f, field(f, key::value), options)});
    }
    s.devices.push_back(std::move(dev));
  }
  return s;
}

}  // namespace

void require_utf8(std::string_view text, std::string_view what) {
  std::size_t i = 0;
  const auto n = text.size();
  auto cont = [&](std::size_t k) {
    return k < n && (static_cast<unsigned char>(text[k]) & 0xc0) == 0x80;
  };
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      len = 4;
      cp = c & 0x07;
    } else {
      len = 0;
    }
    bool ok = len != 0;
    for (std::size_t k = 1; ok && k < len; ++k) {
      ok = cont(i + k);
      if (ok) cp = (cp << 6) | (static_cast<unsigned char>(text[i + k]) & 0x3f);
    }
    // Reject overlong forms, surrogates and out-of-range code points.
    if (ok) {
      ok = !(len == 2 && cp < 0x80) && !(len == 3 && cp < 0x800) &&
           !(len == 4 && (cp < 0x10000 || cp > 0x10ffff)) && !(cp >= 0xd800 && cp <= 0xdfff);
    }
    if (!ok) throw Error(ErrorCode::invalid_argument, std::string(what) + " is not valid UTF-8");
    i += len;
  }
}

void require_finite(double v, std::string_view what) {
  if (!std::isfinite(v))
    throw Error(ErrorCode::non_finite,
                "non-finite value in '" + std::string(what) + "' cannot be encoded");
}

void require_encodable(const Extension& ext, const EncodeOptions& options) {
  if (options.extensions == ExtensionPolicy::passthrough) return;
  const auto& registry = options.registry ? *options.registry : TypeRegistry::global();
  if (!registry.contains(ext.type_name))
    throw Error(ErrorCode::unregistered_extension,
                "extension type '" + ext.type_name + "' is not registered");
}

Record record_from_tree(const nlohmann::json& tree, const DecodeOptions& options) {
  if (!tree.is_object()) malformed("record is not an object");
  auto it = tree.find(key::kind);
  if (it == tree.end()) malformed("missing key 'kind'");
  if (!it->is_string()) malformed("'kind' must be a string");
  const auto& kind = it->get_ref<const std::string&>();
  if (kind == kKindMeta) return metadata_from_tree(tree);
  if (kind == kKindSnap) return snapshot_from_tree(tree, options);
  throw TreeError{ErrorCode::unknown_kind, "unknown record kind '" + kind + "'"};
}

}  // namespace oxdr::detail
