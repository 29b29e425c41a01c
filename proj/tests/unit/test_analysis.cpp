#include <charconv>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "gen.hpp"
#include "oxdr/analysis.hpp"
#include "oxdr/error.hpp"
#include "oxdr/recorder.hpp"
#include "oxdr/simdevices.hpp"

using namespace oxdr;
using namespace oxdr::analysis;
using namespace std::chrono_literals;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an oxdr::Error");
  return ErrorCode::io;
}

RecordingMetadata meta(double rate = 100.0, std::string participant = "P007") {
  RecordingMetadata m;
  m.polling_rate_hz = rate;
  m.participant_id = std::move(participant);
  m.hmd_name = "SimHMD";
  m.hmd_serial = "SIM-0";
  return m;
}

DeviceRecord device(std::int64_t id, std::string name, std::vector<Feature> features) {
  DeviceRecord d;
  d.device_id = id;
  d.name = std::move(name);
  d.serial = "S" + std::to_string(id);
  d.features = std::move(features);
  return d;
}

Snapshot snap(std::int64_t ts, std::vector<DeviceRecord> devices) {
  Snapshot s;
  s.timestamp_us = ts;
  s.frame = ts / 1000;
  s.devices = std::move(devices);
  return s;
}

std::vector<Record> record_hmd(double seconds, double rate) {
  sim::SimSpec spec;
  spec.kind = sim::DeviceKind::hmd;
  spec.native_rate_hz = rate;
  rec::VirtualClock clock;
  rec::MemorySink sink;
  rec::Recorder r;
  r.register_device(sim::make_sim_hmd(spec));
  rec::RecorderConfig c;
  c.polling_rate_hz = rate;
  c.clock = &clock;
  c.sink = &sink;
  c.start_time = UtcTime{};
  r.run(c, std::chrono::nanoseconds(static_cast<std::int64_t>(seconds * 1e9)));
  return sink.records;
}

double as_double(const Cell& c) { return std::get<double>(c); }

}  // namespace

TEST_SUITE("selector") {
  TEST_CASE("wildcard match") {
    CHECK(wildcard_match("", ""));
    CHECK_FALSE(wildcard_match("", "a"));
    CHECK(wildcard_match("*", ""));
    CHECK(wildcard_match("*", "anything"));
    CHECK(wildcard_match("**", "x"));
    CHECK(wildcard_match("trigger_*", "trigger_index"));
    CHECK(wildcard_match("trigger_*", "trigger_"));
    CHECK_FALSE(wildcard_match("trigger_*", "trigge"));
    CHECK(wildcard_match("a*c", "abbbc"));
    CHECK(wildcard_match("a*c", "ac"));
    CHECK_FALSE(wildcard_match("a*c", "acb"));
    CHECK(wildcard_match("*x*", "axb"));
    CHECK(wildcard_match("a*b*c", "a-b-b-c"));
    CHECK_FALSE(wildcard_match("a*b*c", "a-c-b"));
    CHECK(wildcard_match("a?", "a?"));
    CHECK_FALSE(wildcard_match("a?", "ab"));
    CHECK(wildcard_match("[x]", "[x]"));
    CHECK_FALSE(wildcard_match("Sim", "sim"));
  }

  TEST_CASE("wildcard agrees with a recursive oracle") {
    std::function<bool(std::string_view, std::string_view)> oracle =
        [&](std::string_view p, std::string_view t) -> bool {
      if (p.empty()) return t.empty();
      if (p[0] == '*') return oracle(p.substr(1), t) || (!t.empty() && oracle(p, t.substr(1)));
      return !t.empty() && p[0] == t[0] && oracle(p.substr(1), t.substr(1));
    };
    testing::Gen g(7);
    const char alphabet[] = {'a', 'b', '*'};
    for (int i = 0; i < 5000; ++i) {
      std::string p, t;
      for (std::size_t k = g.below(7); k > 0; --k) p += alphabet[g.below(3)];
      for (std::size_t k = g.below(9); k > 0; --k) t += alphabet[g.below(2)];
      INFO("pattern=", p, " text=", t);
      REQUIRE(wildcard_match(p, t) == oracle(p, t));
    }
  }

  TEST_CASE("parse") {
    const std::vector<std::string> exprs{"SimController:trigger_*", "SimHMD", "*:position"};
    auto sel = FeatureSelector::parse(exprs);
    REQUIRE(sel.terms().size() == 3);
    CHECK(sel.terms()[0].device == "SimController");
    CHECK(sel.terms()[0].feature == "trigger_*");
    CHECK(sel.terms()[1].feature == "*");
    CHECK(sel.match("SimController", "trigger_grip") == 0u);
    CHECK(sel.match("SimHMD", "position") == 1u);
    CHECK(sel.match("SimEye", "position") == 2u);
    CHECK_FALSE(sel.match("SimEye", "gaze"));

    const std::vector<std::string> bad1{":x"}, bad2{"dev:"}, none{};
    CHECK(code_of([&] { FeatureSelector::parse(bad1); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { FeatureSelector::parse(bad2); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { FeatureSelector::parse(none); }) == ErrorCode::invalid_argument);
    CHECK(FeatureSelector::all().match("any", "thing") == 0u);
  }
}

TEST_SUITE("filter") {
  TEST_CASE("drops unselected features and empty devices") {
    const Record r = snap(10, {device(0, "A", {{"x", 1.0}, {"y", 2.0}}), device(1, "B", {{"z", 3.0}})});
    const std::vector<std::string> exprs{"A:y"};
    const auto out = std::get<Snapshot>(filter_record(r, FeatureSelector::parse(exprs)));
    CHECK(out.timestamp_us == 10);
    REQUIRE(out.devices.size() == 1);
    CHECK(out.devices[0].name == "A");
    REQUIRE(out.devices[0].features.size() == 1);
    CHECK(out.devices[0].features[0].name == "y");

    const std::vector<std::string> nothing{"Q"};
    const auto empty = std::get<Snapshot>(filter_record(r, FeatureSelector::parse(nothing)));
    CHECK(empty.devices.empty());
    CHECK(empty.timestamp_us == 10);

    const Record m = meta();
    CHECK(filter_record(m, FeatureSelector::parse(nothing)) == m);
  }

  TEST_CASE("counts and warns when nothing matches") {
    const std::vector<Record> records{
        meta(), snap(0, {device(0, "A", {{"x", 1.0}, {"y", 2.0}})}),
        snap(10000, {device(0, "A", {{"x", 1.0}})})};
    std::vector<Record> kept;
    const std::vector<std::string> ax{"A:x"};
    auto report = filter(from_records(records), FeatureSelector::parse(ax),
                         [&](const Record& r) { kept.push_back(r); });
    CHECK(report.records == 3);
    CHECK(report.features_kept == 2);
    CHECK(report.features_dropped == 1);
    CHECK(report.warnings.empty());
    CHECK(kept.size() == 3);

    const std::vector<std::string> none{"Nope"};
    kept.clear();
    report = filter(from_records(records), FeatureSelector::parse(none),
                    [&](const Record& r) { kept.push_back(r); });
    CHECK(report.features_kept == 0);
    CHECK(report.warnings.size() == 1);
    CHECK(kept.size() == 3);
  }
}

TEST_SUITE("summary") {
  TEST_CASE("rates, presence and gaps") {
    auto m = meta();
    m.start_time = UtcTime{1000000s};
    m.end_time = UtcTime{1000000s + 60ms};
    const std::vector<Record> records{
        m,
        snap(0, {device(0, "A", {{"x", 1.0}})}),
        snap(10000, {device(0, "A", {{"x", 1.0}}), device(1, "B", {{"p", Axis{0.5}}})}),
        snap(20000, {device(1, "B", {{"p", Axis{0.5}}, {"q", std::int64_t{1}}}), device(0, "A", {})}),
        snap(30000, {device(0, "A", {{"x", 1.0}})}),
        snap(50000, {device(0, "A", {{"x", 1.0}}), device(1, "B", {{"p", Axis{0.5}}})}),
    };
    const auto s = summarize(from_records(records));
    CHECK(s.snapshots == 5);
    CHECK(s.first_ts_us == 0);
    CHECK(s.last_ts_us == 50000);
    CHECK(s.duration_s == doctest::Approx(0.05));
    CHECK(s.effective_rate_hz == doctest::Approx(80.0));
    CHECK(s.max_interval_us == 20000);
    REQUIRE(s.recorded_duration_s);
    CHECK(*s.recorded_duration_s == doctest::Approx(0.06));
    REQUIRE(s.devices.size() == 2);

    const auto& a = s.devices[0];
    CHECK(a.name == "A");
    CHECK(a.snapshots_present == 5);
    CHECK(a.presence_ratio == 1.0);
    CHECK(a.missed_cycles == 0);
    CHECK(a.max_gap_us == 20000);

    const auto& b = s.devices[1];
    CHECK(b.serial == "S1");
    CHECK(b.snapshots_present == 3);
    CHECK(b.presence_ratio == doctest::Approx(0.6));
    CHECK(b.missed_cycles == 1);
    CHECK(b.max_gap_us == 30000);
    REQUIRE(b.features.size() == 2);
    CHECK(b.features[0] == FeatureInfo{"p", ValueType::Axis, {}});
    CHECK(b.features[1] == FeatureInfo{"q", ValueType::Integer, {}});

    const auto text = format_summary(s);
    CHECK(text.find("snapshots: 5\n") != std::string::npos);
    CHECK(text.find("effective_rate_hz: 80.000\n") != std::string::npos);
    CHECK(text.find("[1] B (S1) presence=0.6000 missed_cycles=1 max_gap_ms=30.000") !=
          std::string::npos);
  }

  TEST_CASE("devices listed by id, extension types named") {
    Extension e;
    e.type_name = "test.blob";
    const std::vector<Record> records{meta(), snap(0, {device(5, "Z", {}), device(2, "Y", {{"e", e}})})};
    const auto s = summarize(from_records(records));
    REQUIRE(s.devices.size() == 2);
    CHECK(s.devices[0].device_id == 2);
    CHECK(s.devices[0].features[0].extension_type == "test.blob");
    CHECK(s.devices[1].device_id == 5);
    CHECK_FALSE(s.recorded_duration_s);
    CHECK(s.effective_rate_hz == 0);
  }

  TEST_CASE("no metadata is malformed") {
    const std::vector<Record> records{snap(0, {})};
    CHECK(code_of([&] { summarize(from_records(records)); }) == ErrorCode::malformed_record);
  }

  TEST_CASE("missed cycles property") {
    testing::Gen g(21);
    for (int iter = 0; iter < 200; ++iter) {
      const std::size_t n = 1 + g.below(60);
      std::vector<Record> records{meta()};
      std::vector<bool> present(n);
      for (std::size_t i = 0; i < n; ++i) {
        present[i] = g.coin();
        std::vector<DeviceRecord> devs;
        if (present[i]) devs.push_back(device(3, "D", {{"x", 0.0}}));
        records.push_back(snap(static_cast<std::int64_t>(i) * 10000, std::move(devs)));
      }
      const auto s = summarize(from_records(records));
      std::size_t first = n, count = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (present[i]) {
          first = std::min(first, i);
          ++count;
        }
      if (count == 0) {
        CHECK(s.devices.empty());
        continue;
      }
      REQUIRE(s.devices.size() == 1);
      CHECK(s.devices[0].snapshots_present == count);
      CHECK(s.devices[0].missed_cycles == (n - first) - count);
    }
  }
}

TEST_SUITE("resample") {
  TEST_CASE("grid step") {
    CHECK(grid_step_us(100) == 10000);
    CHECK(grid_step_us(90) == 11111);
    CHECK(grid_step_us(60) == 16667);
    CHECK(grid_step_us(3) == 333333);
    CHECK(grid_step_us(1e6) == 1);
    CHECK(code_of([] { grid_step_us(0); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { grid_step_us(-5); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { grid_step_us(NAN); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { grid_step_us(3e6); }) == ErrorCode::invalid_argument);
  }

  TEST_CASE("component names") {
    CHECK(component_names(ValueType::Quaternion) ==
          std::vector<std::string_view>{"x", "y", "z", "w"});
    CHECK(component_names(ValueType::Button) == std::vector<std::string_view>{"value", "pressed"});
    CHECK(component_names(ValueType::Touch).size() == 5);
    CHECK(component_names(ValueType::Extension).empty());
  }

  TEST_CASE("hmd at 100 Hz resampled to 90 Hz tracks the closed form") {
    const auto records = record_hmd(10.0, 100.0);
    const std::vector<std::string> exprs{"SimHMD"};
    ResampleOptions o;
    o.target_rate_hz = 90;
    const auto t = resample(from_records(records), FeatureSelector::parse(exprs), o);

    // 1000 samples spanning 9.99 s on an 11111 us grid.
    std::size_t expected_rows = 0;
    for (std::int64_t g = 0; g <= 9990000; g += 11111) ++expected_rows;
    REQUIRE(t.rows() == expected_rows);
    CHECK(t.step_us == 11111);
    CHECK(t.staleness_horizon_ms == doctest::Approx(20.0));
    REQUIRE(t.columns.size() == 7);
    CHECK(t.columns[0].name == "SimHMD.position.x");
    CHECK(t.columns[6].name == "SimHMD.rotation.w");
    CHECK(t.masked_cells() == 0);

    const double pi = std::numbers::pi;
    double worst = 0, worst_norm = 0, worst_yaw = 0;
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const double s = static_cast<double>(t.ts_us[r]) / 1e6;
      // Amplitude 1, frequency 0.5 Hz: (sin pi s, sin 2 pi s, cos pi s).
      worst = std::max(worst, std::abs(as_double(t.columns[0].cells[r]) - std::sin(pi * s)));
      worst = std::max(worst, std::abs(as_double(t.columns[1].cells[r]) - std::sin(2 * pi * s)));
      worst = std::max(worst, std::abs(as_double(t.columns[2].cells[r]) - std::cos(pi * s)));
      const double qx = as_double(t.columns[3].cells[r]), qy = as_double(t.columns[4].cells[r]),
                   qz = as_double(t.columns[5].cells[r]), qw = as_double(t.columns[6].cells[r]);
      worst_norm = std::max(worst_norm, std::abs(std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw) - 1));
      // Yaw at 0.1 rev/s about +Y.
      const double yaw = 2 * std::atan2(qy, qw);
      double d = std::remainder(yaw - 2 * pi * 0.1 * s, 2 * pi);
      worst_yaw = std::max(worst_yaw, std::abs(d));
      CHECK(qx == 0.0);
      CHECK(qz == 0.0);
    }
    CHECK(worst < 1e-3);
    CHECK(worst_norm <= 1e-9);
    CHECK(worst_yaw < 1e-6);
  }

  TEST_CASE("exact grid hits pass through bit for bit") {
    const auto records = record_hmd(1.0, 100.0);
    const std::vector<std::string> exprs{"SimHMD:position"};
    ResampleOptions o;
    o.target_rate_hz = 100;
    const auto t = resample(from_records(records), FeatureSelector::parse(exprs), o);
    REQUIRE(t.rows() == 100);
    std::size_t r = 0;
    for (const auto& rec : records) {
      const auto* s = std::get_if<Snapshot>(&rec);
      if (!s) continue;
      const auto p = std::get<Vector3>(s->devices[0].features[0].value);
      REQUIRE(t.ts_us[r] == s->timestamp_us);
      CHECK(std::memcmp(&std::get<double>(t.columns[0].cells[r]), &p.x, sizeof p.x) == 0);
      CHECK(std::memcmp(&std::get<double>(t.columns[2].cells[r]), &p.z, sizeof p.z) == 0);
      ++r;
    }
  }

  TEST_CASE("interpolation and nearest agree with an independent oracle") {
    testing::Gen g(99);
    for (int iter = 0; iter < 150; ++iter) {
      // Sparse irregular Axis + Button series with random gaps.
      std::vector<Record> records{meta(100.0)};
      std::vector<std::int64_t> ts;
      std::vector<double> vals;
      std::vector<bool> pressed;
      std::int64_t now = g.range(0, 5000);
      const std::size_t n = 2 + g.below(40);
      for (std::size_t i = 0; i < n; ++i) {
        const bool present = i == 0 || i + 1 == n || g.below(4) != 0;
        if (present) {
          ts.push_back(now);
          vals.push_back(g.uniform(-1, 1));
          pressed.push_back(g.coin());
          records.push_back(
              snap(now, {device(0, "D", {{"a", Axis{vals.back()}},
                                         {"b", Button{0.5, static_cast<bool>(pressed.back())}}})}));
        } else {
          records.push_back(snap(now, {}));
        }
        now += g.below(5) == 0 ? g.range(30000, 90000) : g.range(5000, 15000);
      }
      const std::int64_t last = std::get<Snapshot>(records.back()).timestamp_us;
      const double rate = g.uniform(20, 250);
      const double horizon_ms = g.uniform(0, 60);
      const std::int64_t step = std::llround(1e6 / rate);

      const std::vector<std::string> exprs{"D"};
      ResampleOptions o;
      o.target_rate_hz = rate;
      o.staleness_horizon_ms = horizon_ms;
      const auto lin = resample(from_records(records), FeatureSelector::parse(exprs), o);
      o.mode = AlignMode::nearest;
      const auto near = resample(from_records(records), FeatureSelector::parse(exprs), o);

      const std::int64_t first = std::get<Snapshot>(records[1]).timestamp_us;
      REQUIRE(lin.rows() == static_cast<std::size_t>((last - first) / step) + 1);
      REQUIRE(lin.columns.size() == 3);
      CHECK(lin.columns[0].name == "D.a.value");
      CHECK(lin.columns[2].name == "D.b.pressed");
      const double h = horizon_ms * 1000;

      for (std::size_t r = 0; r < lin.rows(); ++r) {
        const std::int64_t grid = first + static_cast<std::int64_t>(r) * step;
        REQUIRE(lin.ts_us[r] == grid);
        std::ptrdiff_t p = -1;
        for (std::size_t i = 0; i < ts.size(); ++i)
          if (ts[i] <= grid) p = static_cast<std::ptrdiff_t>(i);
        const std::ptrdiff_t q = p + 1 < static_cast<std::ptrdiff_t>(ts.size()) ? p + 1 : -1;

        // Linear component: exact hit, or both neighbours within the horizon.
        const bool hold_ok = p >= 0 && static_cast<double>(grid - ts[p]) <= h;
        const bool exact = p >= 0 && ts[p] == grid;
        const bool bracket = hold_ok && q >= 0 && static_cast<double>(ts[q] - grid) <= h;
        const auto& a = lin.columns[0].cells[r];
        if (exact) {
          CHECK(as_double(a) == vals[p]);
        } else if (bracket) {
          const double alpha = static_cast<double>(grid - ts[p]) / static_cast<double>(ts[q] - ts[p]);
          CHECK(as_double(a) == doctest::Approx(vals[p] + alpha * (vals[q] - vals[p])).epsilon(1e-12));
        } else {
          CHECK(std::holds_alternative<std::monostate>(a));
        }
        // Held component: previous sample within the horizon.
        const auto& b = lin.columns[2].cells[r];
        if (hold_ok) CHECK(std::get<bool>(b) == pressed[p]);
        else CHECK(std::holds_alternative<std::monostate>(b));

        // Nearest: closer neighbour, ties to the earlier one.
        const double dp = p >= 0 ? static_cast<double>(grid - ts[p]) : INFINITY;
        const double dq = q >= 0 ? static_cast<double>(ts[q] - grid) : INFINITY;
        const std::ptrdiff_t pick = dp <= dq ? p : q;
        const double d = std::min(dp, dq);
        const auto& na = near.columns[0].cells[r];
        const auto& nb = near.columns[2].cells[r];
        if (d <= h) {
          CHECK(as_double(na) == vals[pick]);
          CHECK(std::get<bool>(nb) == pressed[pick]);
        } else {
          CHECK(std::holds_alternative<std::monostate>(na));
          CHECK(std::holds_alternative<std::monostate>(nb));
        }
      }
    }
  }

  TEST_CASE("a larger horizon never masks more cells") {
    testing::Gen g(5);
    for (int iter = 0; iter < 100; ++iter) {
      std::vector<Record> records{meta()};
      std::int64_t now = 0;
      for (std::size_t i = 0, n = 5 + g.below(50); i < n; ++i) {
        std::vector<DeviceRecord> devs;
        if (g.below(3) != 0) {
          const double a = g.uniform(0, 6.28);
          devs.push_back(device(0, "D", {{"q", Quaternion{0, std::sin(a), 0, std::cos(a)}},
                                         {"k", Key{7, g.coin()}},
                                         {"v", Vector2{g.uniform(-1, 1), 0}}}));
        }
        records.push_back(snap(now, std::move(devs)));
        now += g.range(1000, 40000);
      }
      const std::vector<std::string> exprs{"*"};
      ResampleOptions o;
      o.target_rate_hz = g.uniform(30, 200);
      o.mode = g.coin() ? AlignMode::nearest : AlignMode::interpolate;
      double h1 = g.uniform(0, 50), h2 = g.uniform(0, 50);
      if (h1 > h2) std::swap(h1, h2);
      o.staleness_horizon_ms = h1;
      ResampledTable t1, t2;
      try {
        t1 = resample(from_records(records), FeatureSelector::parse(exprs), o);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::empty_table);
        continue;
      }
      o.staleness_horizon_ms = h2;
      t2 = resample(from_records(records), FeatureSelector::parse(exprs), o);
      CHECK(t2.masked_cells() <= t1.masked_cells());
      REQUIRE(t1.columns.size() == t2.columns.size());
      for (std::size_t c = 0; c < t1.columns.size(); ++c)
        for (std::size_t r = 0; r < t1.rows(); ++r)
          if (t1.valid(c, r)) {
            REQUIRE(t2.valid(c, r));
            CHECK(t1.columns[c].cells[r] == t2.columns[c].cells[r]);
          }
      for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t r = 0; r < t2.rows(); ++r)
          if (t2.valid(c, r)) {
            double n = 0;
            for (std::size_t k = 0; k < 4; ++k) {
              const double v = as_double(t2.columns[k].cells[r]);
              n += v * v;
            }
            CHECK(std::abs(std::sqrt(n) - 1) <= 1e-9);
          }
    }
  }

  TEST_CASE("quaternion interpolation takes the short arc") {
    const double s = std::sqrt(0.5);
    const std::vector<Record> records{
        meta(),
        snap(0, {device(0, "D", {{"q", Quaternion{0, 0, 0, 1}}})}),
        snap(10000, {device(0, "D", {{"q", Quaternion{0, -s, 0, -s}}})})};
    const std::vector<std::string> exprs{"D"};
    ResampleOptions o;
    o.target_rate_hz = 200;
    const auto t = resample(from_records(records), FeatureSelector::parse(exprs), o);
    REQUIRE(t.rows() == 3);
    // Midway between identity and a 90 degree yaw is a 45 degree yaw.
    CHECK(as_double(t.columns[1].cells[1]) == doctest::Approx(std::sin(std::numbers::pi / 8)));
    CHECK(as_double(t.columns[3].cells[1]) == doctest::Approx(std::cos(std::numbers::pi / 8)));
  }

  TEST_CASE("default horizon follows the polling rate") {
    const std::vector<Record> records{meta(50.0), snap(0, {device(0, "D", {{"x", 1.0}})}),
                                      snap(100000, {device(0, "D", {{"x", 2.0}})})};
    const std::vector<std::string> exprs{"D"};
    ResampleOptions o;
    o.target_rate_hz = 100;
    auto t = resample(from_records(records), FeatureSelector::parse(exprs), o);
    CHECK(t.staleness_horizon_ms == doctest::Approx(40.0));
    CHECK(t.rows() == 11);
    CHECK(t.valid(0, 0));
    CHECK_FALSE(t.valid(0, 1));
    CHECK_FALSE(t.valid(0, 9));
    CHECK(t.valid(0, 10));

    auto m = meta(0.0);
    const std::vector<Record> no_rate{m, records[1], records[2]};
    t = resample(from_records(no_rate), FeatureSelector::parse(exprs), o);
    CHECK(t.staleness_horizon_ms == doctest::Approx(100.0));
    CHECK(t.masked_cells() == 0);

    o.staleness_horizon_ms = -1;
    CHECK(code_of([&] { resample(from_records(records), FeatureSelector::parse(exprs), o); }) ==
          ErrorCode::invalid_argument);
    o.staleness_horizon_ms.reset();
    o.target_rate_hz = 0;
    CHECK(code_of([&] { resample(from_records(records), FeatureSelector::parse(exprs), o); }) ==
          ErrorCode::invalid_argument);
  }

  TEST_CASE("column order and colliding device names") {
    const std::vector<Record> records{
        meta(),
        snap(0, {device(0, "Ctl", {{"x", Axis{0.1}}, {"y", 1.0}}), device(1, "Ctl", {{"x", Axis{0.2}}}),
                 device(2, "Head", {{"pos", Vector3{1, 2, 3}}})}),
    };
    const std::vector<std::string> exprs{"Head", "Ctl:x", "*"};
    ResampleOptions o;
    o.target_rate_hz = 10;
    const auto t = resample(from_records(records), FeatureSelector::parse(exprs), o);
    REQUIRE(t.rows() == 1);
    std::vector<std::string> names;
    for (const auto& c : t.columns) names.push_back(c.name);
    CHECK(names == std::vector<std::string>{"Head.pos.x", "Head.pos.y", "Head.pos.z",
                                            "Ctl#0.x.value", "Ctl#1.x.value", "Ctl#0.y.value"});
    CHECK(t.find("Ctl#1.x.value") != nullptr);
    CHECK(as_double(t.find("Ctl#1.x.value")->cells[0]) == 0.2);
    CHECK(t.find("Ctl.x.value") == nullptr);
  }

  TEST_CASE("empty tables are errors") {
    Extension e;
    e.type_name = "test.blob";
    const std::vector<Record> records{meta(), snap(0, {device(0, "D", {{"e", e}})})};
    const std::vector<std::string> all{"*"}, none{"Nope"};
    ResampleOptions o;
    o.target_rate_hz = 10;
    CHECK(code_of([&] { resample(from_records(records), FeatureSelector::parse(all), o); }) ==
          ErrorCode::empty_table);
    CHECK(code_of([&] { resample(from_records(records), FeatureSelector::parse(none), o); }) ==
          ErrorCode::empty_table);
    const std::vector<Record> only_meta{meta()};
    CHECK(code_of([&] { resample(from_records(only_meta), FeatureSelector::parse(all), o); }) ==
          ErrorCode::empty_table);
    std::ostringstream out;
    CHECK(code_of([&] { export_csv(ResampledTable{}, out); }) == ErrorCode::empty_table);
  }
}

TEST_SUITE("csv") {
  TEST_CASE("escaping") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("l1\nl2") == "\"l1\nl2\"");
    CHECK(csv_escape("cr\r") == "\"cr\r\"");
    const auto rows = parse_csv("a,\"b,c\",\"d\"\"e\"\n,\n\"x\ny\",z\n");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "d\"e"});
    CHECK(rows[1] == std::vector<std::string>{"", ""});
    CHECK(rows[2] == std::vector<std::string>{"x\ny", "z"});
  }

  TEST_CASE("export re-parses to the same cells") {
    testing::Gen g(1234);
    for (int iter = 0; iter < 50; ++iter) {
      ResampledTable t;
      const std::size_t rows = 1 + g.below(30);
      for (std::size_t r = 0; r < rows; ++r) t.ts_us.push_back(static_cast<std::int64_t>(r) * 1000);
      const std::size_t cols = 1 + g.below(6);
      for (std::size_t c = 0; c < cols; ++c) {
        Column col;
        col.name = c == 0 ? "odd, \"name\"" : "c" + std::to_string(c);
        for (std::size_t r = 0; r < rows; ++r) {
          switch (g.below(5)) {
            case 0: col.cells.push_back(std::monostate{}); break;
            case 1: col.cells.push_back(g.finite_double()); break;
            case 2: col.cells.push_back(g.any_int()); break;
            case 3: col.cells.push_back(g.coin()); break;
            default: {
              std::string s = g.text(6);
              if (s.empty()) s = "s";
              col.cells.push_back(s);
            }
          }
        }
        t.columns.push_back(std::move(col));
      }
      std::ostringstream out;
      const auto counts = export_csv(t, out);
      CHECK(counts.rows == rows);
      CHECK(counts.columns == cols + 1);
      const auto text = out.str();
      CHECK(text.find("\r\n") == std::string::npos);
      const auto parsed = parse_csv(text);
      REQUIRE(parsed.size() == rows + 1);
      CHECK(parsed[0][0] == "ts_us");
      CHECK(parsed[0][1] == t.columns[0].name);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto& line = parsed[r + 1];
        REQUIRE(line.size() == cols + 1);
        CHECK(line[0] == std::to_string(t.ts_us[r]));
        for (std::size_t c = 0; c < cols; ++c) {
          const auto& cell = t.columns[c].cells[r];
          const auto& field = line[c + 1];
          if (std::holds_alternative<std::monostate>(cell)) {
            CHECK(field.empty());
          } else if (const auto* d = std::get_if<double>(&cell)) {
            double back = 0;
            auto res = std::from_chars(field.data(), field.data() + field.size(), back);
            REQUIRE(res.ec == std::errc{});
            CHECK(res.ptr == field.data() + field.size());
            CHECK(std::memcmp(&back, d, sizeof back) == 0);
          } else if (const auto* i = std::get_if<std::int64_t>(&cell)) {
            CHECK(field == std::to_string(*i));
          } else if (const auto* b = std::get_if<bool>(&cell)) {
            CHECK(field == (*b ? "1" : "0"));
          } else {
            CHECK(field == std::get<std::string>(cell));
          }
        }
      }
    }
  }
}

TEST_SUITE("questionnaire") {
  DemographicsResponse response(std::string id) {
    DemographicsResponse r;
    r.participant_id = std::move(id);
    r.age_years = 29;
    r.gender = Gender::self_described;
    r.gender_text = "agender, \"mostly\"";
    r.native_language = "de";
    r.vision_correction = true;
    r.vr_experience = 3;
    return r;
  }

  TEST_CASE("responses round trip") {
    std::vector<DemographicsResponse> in{response("P007"), response("P008")};
    in[1].gender = Gender::female;
    in[1].gender_text.clear();
    in[1].vr_experience = 0;
    std::string text;
    for (const auto& r : in) text += encode_response(r);
    text += "\n   \n";
    std::istringstream s(text);
    CHECK(read_responses(s) == in);
  }

  TEST_CASE("bad responses name the line") {
    const std::string good = encode_response(response("P1"));
    for (std::string bad : {
             std::string("{not json}"),
             std::string(R"({"participant_id":"P2","age_years":0,"gender":"male","native_language":"en","vision_correction":false,"vr_experience":1})"),
             std::string(R"({"participant_id":"P2","age_years":30,"gender":"robot","native_language":"en","vision_correction":false,"vr_experience":1})"),
             std::string(R"({"participant_id":"P2","age_years":30,"gender":"male","native_language":"en","vision_correction":false,"vr_experience":8})"),
             std::string(R"({"participant_id":"P2","age_years":30.5,"gender":"male","native_language":"en","vision_correction":false,"vr_experience":1})"),
             std::string(R"({"participant_id":"P2","age_years":30,"gender":"self_described","native_language":"en","vision_correction":false,"vr_experience":1})"),
             std::string(R"({"participant_id":"P2","age_years":30,"gender":"male","vision_correction":false,"vr_experience":1})"),
         }) {
      std::istringstream s(good + bad + "\n");
      try {
        read_responses(s);
        FAIL("accepted: " << bad);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::malformed_record);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
      }
    }
  }

  TEST_CASE("matching") {
    const std::vector<DemographicsResponse> rs{response("P001"), response("P007")};
    auto j = match_participant("P007", rs);
    CHECK(j.matched());
    CHECK(j.response->participant_id == "P007");
    j = match_participant("P999", rs);
    CHECK_FALSE(j.matched());
    CHECK(j.participant_id == "P999");
    CHECK(format_join(j) == "participant: P999\ndemographics: unmatched\n");
    CHECK(code_of([&] { match_participant("", rs); }) == ErrorCode::missing_participant);
    const std::vector<DemographicsResponse> dup{response("P007"), response("P007")};
    CHECK(code_of([&] { match_participant("P007", dup); }) == ErrorCode::ambiguous_participant);
    const auto text = format_join(match_participant("P001", rs));
    CHECK(text.find("demographics: matched\n") != std::string::npos);
    CHECK(text.find("gender: self_described (agender, \"mostly\")\n") != std::string::npos);
    CHECK(text.find("vr_experience: 3 / 7\n") != std::string::npos);
  }

  TEST_CASE("join appends constant columns") {
    const std::vector<Record> records{meta(100.0, "P007"), snap(0, {device(0, "D", {{"x", 1.0}})}),
                                      snap(20000, {device(0, "D", {{"x", 3.0}})})};
    const std::vector<std::string> exprs{"D"};
    ResampleOptions o;
    o.target_rate_hz = 100;
    auto t = resample(from_records(records), FeatureSelector::parse(exprs), o);
    REQUIRE(t.rows() == 3);
    const std::vector<DemographicsResponse> rs{response("P007")};
    const auto j = join_questionnaire(t, rs);
    CHECK(j.matched());
    REQUIRE(t.columns.size() == 9);
    CHECK(t.columns[1].name == "participant_id");
    CHECK(t.columns[2].name == "demographics.status");
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(std::get<std::string>(t.columns[1].cells[r]) == "P007");
      CHECK(std::get<std::string>(t.columns[2].cells[r]) == "matched");
      CHECK(std::get<std::int64_t>(t.find("demographics.age_years")->cells[r]) == 29);
      CHECK(std::get<bool>(t.find("demographics.vision_correction")->cells[r]));
    }

    auto u = resample(from_records(records), FeatureSelector::parse(exprs), o);
    const std::vector<DemographicsResponse> others{response("P001")};
    CHECK_FALSE(join_questionnaire(u, others).matched());
    CHECK(std::get<std::string>(u.find("demographics.status")->cells[0]) == "unmatched");
    CHECK_FALSE(u.valid(3, 0));
    CHECK_FALSE(u.valid(8, 2));

    std::ostringstream csv;
    export_csv(u, csv);
    CHECK(csv.str().rfind("ts_us,D.x.value,participant_id,demographics.status,", 0) == 0);
    CHECK(csv.str().find("\n0,1,P007,unmatched,,,,,,\n") != std::string::npos);
  }

  TEST_CASE("summary join") {
    const std::vector<Record> records{meta(100.0, "P007"), snap(0, {})};
    const std::vector<DemographicsResponse> rs{response("P007")};
    const auto a = join_questionnaire(summarize(from_records(records)), rs);
    CHECK(a.join.matched());
    CHECK(a.summary.snapshots == 1);
  }
}
