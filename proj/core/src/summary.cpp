#include <algorithm>
#include <map>
#include <sstream>

#include "numfmt.hpp"
#include "oxdr/analysis.hpp"
#include "oxdr/error.hpp"

namespace oxdr::analysis {
namespace {

struct DeviceTrack {
  DeviceSummary summary;
  std::int64_t last_seen_us = 0;
  bool seen = false;
};

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

}  // namespace

SessionSummary summarize(const RecordSource& source) {
  SessionSummary out;
  bool have_meta = false;
  std::map<std::int64_t, DeviceTrack> devices;
  std::optional<std::int64_t> prev_ts;

  while (auto record = source()) {
    if (auto* meta = std::get_if<RecordingMetadata>(&*record)) {
      if (!have_meta) out.metadata = std::move(*meta);
      have_meta = true;
      continue;
    }
    const auto& snap = std::get<Snapshot>(*record);
    if (out.snapshots == 0) out.first_ts_us = snap.timestamp_us;
    out.last_ts_us = snap.timestamp_us;
    if (prev_ts) out.max_interval_us = std::max(out.max_interval_us, snap.timestamp_us - *prev_ts);
    prev_ts = snap.timestamp_us;
    ++out.snapshots;

    for (auto& [id, track] : devices) {
      if (track.seen && !snap.find(id)) ++track.summary.missed_cycles;
    }
    for (const auto& dev : snap.devices) {
      auto& track = devices[dev.device_id];
      auto& s = track.summary;
      if (!track.seen) {
        s.device_id = dev.device_id;
        s.name = dev.name;
        s.serial = dev.serial;
      } else {
        s.max_gap_us = std::max(s.max_gap_us, snap.timestamp_us - track.last_seen_us);
      }
      track.seen = true;
      track.last_seen_us = snap.timestamp_us;
      ++s.snapshots_present;
      for (const auto& f : dev.features) {
        FeatureInfo info{f.name, type_of(f.value), {}};
        if (const auto* ext = std::get_if<Extension>(&f.value)) info.extension_type = ext->type_name;
        if (std::find(s.features.begin(), s.features.end(), info) == s.features.end())
          s.features.push_back(std::move(info));
      }
    }
  }
  if (!have_meta)
    throw Error(ErrorCode::malformed_record, "recording has no metadata record");

  out.duration_s = static_cast<double>(out.last_ts_us - out.first_ts_us) * 1e-6;
  if (out.snapshots > 1 && out.duration_s > 0)
    out.effective_rate_hz = static_cast<double>(out.snapshots - 1) / out.duration_s;
  if (out.metadata.end_time) {
    out.recorded_duration_s =
        static_cast<double>((*out.metadata.end_time - out.metadata.start_time).count()) * 1e-6;
  }
  for (auto& [id, track] : devices) {
    track.summary.presence_ratio =
        out.snapshots ? static_cast<double>(track.summary.snapshots_present) /
                            static_cast<double>(out.snapshots)
                      : 0.0;
    out.devices.push_back(std::move(track.summary));
  }
  return out;
}

std::string format_summary(const SessionSummary& s) {
  std::ostringstream out;
  const auto& m = s.metadata;
  out << "format_version: " << m.format_version << "\n"
      << "participant_id: " << m.participant_id << "\n"
      << "session_label: " << m.session_label << "\n"
      << "hmd: " << m.hmd_name << " (" << m.hmd_serial << ")\n"
      << "start_time: " << format_utc(m.start_time) << "\n"
      << "end_time: " << (m.end_time ? format_utc(*m.end_time) : std::string("(not finalized)"))
      << "\n"
      << "polling_rate_hz: " << fixed(m.polling_rate_hz, 3) << "\n"
      << "snapshots: " << s.snapshots << "\n"
      << "duration_s: " << fixed(s.duration_s, 6) << "\n"
      << "effective_rate_hz: " << fixed(s.effective_rate_hz, 3) << "\n"
      << "max_interval_ms: " << fixed(static_cast<double>(s.max_interval_us) / 1000.0, 3) << "\n"
      << "devices: " << s.devices.size() << "\n";
  for (const auto& d : s.devices) {
    out << "  [" << d.device_id << "] " << d.name << " (" << d.serial << ")"
        << " presence=" << fixed(d.presence_ratio, 4) << " missed_cycles=" << d.missed_cycles
        << " max_gap_ms=" << fixed(static_cast<double>(d.max_gap_us) / 1000.0, 3) << "\n";
    for (const auto& f : d.features) {
      out << "      " << f.name << ": " << to_string(f.type);
      if (!f.extension_type.empty()) out << " (" << f.extension_type << ")";
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace oxdr::analysis
