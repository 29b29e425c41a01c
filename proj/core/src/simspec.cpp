#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "numfmt.hpp"
#include "oxdr/error.hpp"
#include "oxdr/simdevices.hpp"

namespace oxdr::sim {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Parser {
 public:
  Parser(std::string_view origin) : origin_(origin) {}

  [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
    throw Error(ErrorCode::invalid_argument,
                std::string(origin_) + ":" + std::to_string(line) + ": " + msg);
  }

  double real(std::size_t line, std::string_view key, std::string_view v) const {
    auto d = detail::parse_double(v);
    if (!d || !std::isfinite(*d)) fail(line, "'" + std::string(key) + "' expects a number");
    return *d;
  }

  std::uint64_t unsigned_int(std::size_t line, std::string_view key, std::string_view v) const {
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
      fail(line, "'" + std::string(key) + "' expects a non-negative integer");
    return out;
  }

  std::int64_t positive_int(std::size_t line, std::string_view key, std::string_view v) const {
    const auto u = unsigned_int(line, key, v);
    if (u == 0) fail(line, "'" + std::string(key) + "' must be positive");
    return static_cast<std::int64_t>(u);
  }

  bool boolean(std::size_t line, std::string_view key, std::string_view v) const {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail(line, "'" + std::string(key) + "' expects true or false");
  }

  Vector3 vec3(std::size_t line, std::string_view key, std::string_view v) const {
    std::istringstream in{std::string(v)};
    std::string a, b, c, extra;
    if (!(in >> a >> b >> c) || (in >> extra))
      fail(line, "'" + std::string(key) + "' expects three numbers");
    return {real(line, key, a), real(line, key, b), real(line, key, c)};
  }

 private:
  std::string_view origin_;
};

void apply_session_key(const Parser& p, std::size_t line, std::string_view k,
                       std::string_view v, SessionSpec& s) {
  auto& m = s.metadata;
  if (k == "start_time") {
    try {
      s.start_time = parse_utc(v);
    } catch (const Error& e) {
      p.fail(line, e.what());
    }
  } else if (k == "participant_id") {
    m.participant_id = v;
  } else if (k == "session_label") {
    m.session_label = v;
  } else if (k == "hmd_name") {
    m.hmd_name = v;
  } else if (k == "hmd_serial") {
    m.hmd_serial = v;
  } else if (k == "storage_medium") {
    m.storage_medium = v;
  } else if (k == "consent_recorded") {
    m.consent_recorded = p.boolean(line, k, v);
  } else if (k == "frame_rate_hz") {
    s.frame_rate_hz = p.real(line, k, v);
    if (!(s.frame_rate_hz > 0)) p.fail(line, "frame_rate_hz must be positive");
  } else if (k == "video_width") {
    m.video_width = p.positive_int(line, k, v);
  } else if (k == "video_height") {
    m.video_height = p.positive_int(line, k, v);
  } else if (k == "video_filename") {
    m.video_filename = std::string(v);
  } else {
    p.fail(line, "unknown session key '" + std::string(k) + "'");
  }
}

void apply_device_key(const Parser& p, std::size_t line, std::string_view k, std::string_view v,
                      SimDeviceEntry& d) {
  auto& s = d.spec;
  if (k == "kind") {
    auto kind = parse_device_kind(v);
    if (!kind) p.fail(line, "unknown device kind '" + std::string(v) + "'");
    s.kind = *kind;
  } else if (k == "name") {
    d.name = v;
  } else if (k == "serial") {
    d.serial = v;
  } else if (k == "seed") {
    s.seed = p.unsigned_int(line, k, v);
  } else if (k == "native_rate_hz") {
    s.native_rate_hz = p.real(line, k, v);
  } else if (k == "amplitude") {
    s.amplitude = p.vec3(line, k, v);
  } else if (k == "frequency_hz") {
    s.frequency_hz = p.real(line, k, v);
  } else if (k == "phase_rad") {
    s.phase_rad = p.real(line, k, v);
  } else if (k == "rotation_hz") {
    s.rotation_hz = p.real(line, k, v);
  } else if (k == "button_duty") {
    s.button_duty = p.real(line, k, v);
  } else if (k == "touch_segment_s") {
    s.touch_segment_s = p.real(line, k, v);
  } else if (k == "pupil_hz") {
    s.pupil_hz = p.real(line, k, v);
  } else if (k == "register_at_s") {
    d.register_at_s = p.real(line, k, v);
    if (d.register_at_s < 0) p.fail(line, "register_at_s must not be negative");
  } else {
    p.fail(line, "unknown device key '" + std::string(k) + "'");
  }
}

std::string default_name(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::hmd: return "SimHMD";
    case DeviceKind::controller: return "SimController";
    case DeviceKind::eye_tracker: return "SimEyeTracker";
  }
  return "SimDevice";
}

std::string fmt(double v) {
  std::string s;
  detail::append_shortest(s, v);
  return s;
}

}  // namespace

SessionSpec parse_session_spec(std::string_view text, std::string_view origin) {
  Parser p(origin);
  SessionSpec spec;
  spec.devices.clear();
  enum class Section { none, session, device } section = Section::none;
  std::vector<std::size_t> device_lines;

  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']') p.fail(line_no, "unterminated section header");
      const auto header = trim(line.substr(1, line.size() - 2));
      if (header == "session") {
        section = Section::session;
      } else if (header == "device" || header.starts_with("device ")) {
        section = Section::device;
        SimDeviceEntry entry;
        entry.label = std::string(trim(header.substr(6)));
        spec.devices.push_back(std::move(entry));
        device_lines.push_back(line_no);
      } else {
        p.fail(line_no, "unknown section '" + std::string(header) + "'");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) p.fail(line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) p.fail(line_no, "empty key");

    switch (section) {
      case Section::none: p.fail(line_no, "key outside of a section");
      case Section::session: apply_session_key(p, line_no, key, value, spec); break;
      case Section::device: apply_device_key(p, line_no, key, value, spec.devices.back()); break;
    }
  }

  const auto& m = spec.metadata;
  const int video = int(m.video_width.has_value()) + int(m.video_height.has_value()) +
                    int(m.video_filename.has_value());
  if (video != 0 && video != 3)
    p.fail(line_no, "video_width, video_height and video_filename go together");

  for (std::size_t i = 0; i < spec.devices.size(); ++i) {
    auto& d = spec.devices[i];
    if (d.name.empty()) d.name = default_name(d.spec.kind);
    if (d.serial.empty()) d.serial = "SIM-" + std::to_string(i);
    if (auto bad = d.spec.check()) p.fail(device_lines[i], *bad);
    for (std::size_t j = 0; j < i; ++j) {
      if (spec.devices[j].name == d.name && spec.devices[j].serial == d.serial)
        p.fail(device_lines[i], "device '" + d.name + "' with serial '" + d.serial +
                                    "' is declared twice");
    }
  }
  if (spec.metadata.hmd_name.empty()) {
    for (const auto& d : spec.devices) {
      if (d.spec.kind == DeviceKind::hmd) {
        spec.metadata.hmd_name = d.name;
        spec.metadata.hmd_serial = d.serial;
        break;
      }
    }
  }
  return spec;
}

SessionSpec load_session_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read spec file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_session_spec(text.str(), path.string());
}

SessionSpec default_session_spec() {
  static constexpr std::string_view kDefault = R"(# Built-in simulated session.
[session]
start_time = 2025-01-01T00:00:00.000000Z
participant_id = P007
session_label = simulated
storage_medium = local
consent_recorded = true
frame_rate_hz = 72

[device hmd]
kind = hmd
name = SimHMD
serial = SIM-HMD-0001
seed = 42
native_rate_hz = 100
amplitude = 1 1 1
frequency_hz = 0.5
rotation_hz = 0.1

[device controller]
kind = controller
name = SimController
serial = SIM-CTL-0001
seed = 42
native_rate_hz = 100
amplitude = 0.3 0.2 0.3
frequency_hz = 0.25
rotation_hz = 0.2
button_duty = 0.3

[device eye]
kind = eye_tracker
name = SimEyeTracker
serial = SIM-EYE-0001
seed = 42
native_rate_hz = 200
amplitude = 0.3 0.15 0
frequency_hz = 0.4
pupil_hz = 0.05
)";
  return parse_session_spec(kDefault, "<default>");
}

std::string format_session_spec(const SessionSpec& spec) {
  std::ostringstream out;
  const auto& m = spec.metadata;
  out << "[session]\n";
  if (spec.start_time) out << "start_time = " << format_utc(*spec.start_time) << "\n";
  out << "participant_id = " << m.participant_id << "\n"
      << "session_label = " << m.session_label << "\n"
      << "hmd_name = " << m.hmd_name << "\n"
      << "hmd_serial = " << m.hmd_serial << "\n"
      << "storage_medium = " << m.storage_medium << "\n"
      << "consent_recorded = " << (m.consent_recorded ? "true" : "false") << "\n"
      << "frame_rate_hz = " << fmt(spec.frame_rate_hz) << "\n";
  if (auto v = m.video()) {
    out << "video_width = " << v->width << "\n"
        << "video_height = " << v->height << "\n"
        << "video_filename = " << v->filename << "\n";
  }
  for (const auto& d : spec.devices) {
    const auto& s = d.spec;
    out << "\n[device " << d.label << "]\n"
        << "kind = " << to_string(s.kind) << "\n"
        << "name = " << d.name << "\n"
        << "serial = " << d.serial << "\n"
        << "seed = " << s.seed << "\n"
        << "native_rate_hz = " << fmt(s.native_rate_hz) << "\n"
        << "amplitude = " << fmt(s.amplitude.x) << " " << fmt(s.amplitude.y) << " "
        << fmt(s.amplitude.z) << "\n"
        << "frequency_hz = " << fmt(s.frequency_hz) << "\n"
        << "phase_rad = " << fmt(s.phase_rad) << "\n"
        << "rotation_hz = " << fmt(s.rotation_hz) << "\n"
        << "button_duty = " << fmt(s.button_duty) << "\n"
        << "touch_segment_s = " << fmt(s.touch_segment_s) << "\n"
        << "pupil_hz = " << fmt(s.pupil_hz) << "\n"
        << "register_at_s = " << fmt(d.register_at_s) << "\n";
  }
  return out.str();
}

}  // namespace oxdr::sim
