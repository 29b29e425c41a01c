#pragma once

#include <chrono>
#include <vector>

#include "oxdr/recorder.hpp"
#include "oxdr/simdevices.hpp"

namespace oxdr::bench {

/// Default simulated session on the virtual clock.
inline std::vector<Record> simulated_session(std::chrono::nanoseconds duration, double rate = 100.0) {
  const auto spec = sim::default_session_spec();
  rec::Recorder r;
  for (const auto& d : spec.devices) r.register_device(sim::make_sim_device(d.spec, d.name, d.serial));
  rec::VirtualClock clock;
  rec::MemorySink sink;
  rec::RecorderConfig c;
  c.polling_rate_hz = rate;
  c.clock = &clock;
  c.sink = &sink;
  c.metadata = spec.metadata;
  c.start_time = spec.start_time;
  r.run(c, duration);
  return sink.records;
}

}  // namespace oxdr::bench
