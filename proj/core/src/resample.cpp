#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "oxdr/analysis.hpp"
#include "oxdr/error.hpp"

namespace oxdr::analysis {
namespace {

constexpr double kDefaultHorizonMs = 100.0;

struct Series {
  std::int64_t device_id = 0;
  std::string device_name;
  std::string feature;
  ValueType type = ValueType::Integer;
  std::size_t term = 0;
  std::size_t order = 0;  // first appearance
  std::vector<std::int64_t> ts;
  std::vector<FeatureValue> values;
};

double lerp(double a, double b, double alpha) { return a + alpha * (b - a); }

// Fills one cell per component of `a`'s type. `b` is the next sample for
// linear components (nullptr means `a` is used as is).
class CellWriter {
 public:
  CellWriter(Cell* out, const FeatureValue* b, double alpha, bool linear_ok, bool hold_ok)
      : out_(out), b_(b), alpha_(alpha), linear_ok_(linear_ok), hold_ok_(hold_ok) {}

  void operator()(std::int64_t v) { hold(v); }
  void operator()(double v) { linear(v, [](const FeatureValue& f) { return std::get<double>(f); }); }
  void operator()(const Vector2& v) {
    linear(v.x, [](const FeatureValue& f) { return std::get<Vector2>(f).x; });
    linear(v.y, [](const FeatureValue& f) { return std::get<Vector2>(f).y; });
  }
  void operator()(const Vector3& v) {
    linear(v.x, [](const FeatureValue& f) { return std::get<Vector3>(f).x; });
    linear(v.y, [](const FeatureValue& f) { return std::get<Vector3>(f).y; });
    linear(v.z, [](const FeatureValue& f) { return std::get<Vector3>(f).z; });
  }
  void operator()(const Quaternion& q) {
    if (!linear_ok_) {
      for (int i = 0; i < 4; ++i) *out_++ = std::monostate{};
      return;
    }
    Quaternion r = q;
    if (b_) {
      auto q1 = std::get<Quaternion>(*b_);
      // Shortest arc: flip the far endpoint into q's hemisphere.
      if (q.x * q1.x + q.y * q1.y + q.z * q1.z + q.w * q1.w < 0) q1 = {-q1.x, -q1.y, -q1.z, -q1.w};
      r = {lerp(q.x, q1.x, alpha_), lerp(q.y, q1.y, alpha_), lerp(q.z, q1.z, alpha_),
           lerp(q.w, q1.w, alpha_)};
      const double n = std::sqrt(r.x * r.x + r.y * r.y + r.z * r.z + r.w * r.w);
      if (n > 0) r = {r.x / n, r.y / n, r.z / n, r.w / n};
    }
    *out_++ = r.x;
    *out_++ = r.y;
    *out_++ = r.z;
    *out_++ = r.w;
  }
  void operator()(const Axis& v) {
    linear(v.value, [](const FeatureValue& f) { return std::get<Axis>(f).value; });
  }
  void operator()(const Button& v) {
    linear(v.value, [](const FeatureValue& f) { return std::get<Button>(f).value; });
    hold(v.pressed);
  }
  void operator()(const Key& v) {
    hold(v.code);
    hold(v.pressed);
  }
  void operator()(const Stick& v) {
    linear(v.x, [](const FeatureValue& f) { return std::get<Stick>(f).x; });
    linear(v.y, [](const FeatureValue& f) { return std::get<Stick>(f).y; });
  }
  void operator()(const DPad& v) {
    hold(v.up);
    hold(v.down);
    hold(v.left);
    hold(v.right);
  }
  void operator()(const Touch& v) {
    hold(v.touch_id);
    linear(v.position.x, [](const FeatureValue& f) { return std::get<Touch>(f).position.x; });
    linear(v.position.y, [](const FeatureValue& f) { return std::get<Touch>(f).position.y; });
    linear(v.pressure, [](const FeatureValue& f) { return std::get<Touch>(f).pressure; });
    hold(std::string(to_string(v.phase)));
  }
  void operator()(const Extension&) {}

 private:
  template <class Get>
  void linear(double a, Get get) {
    if (!linear_ok_) {
      *out_++ = std::monostate{};
    } else {
      *out_++ = b_ ? lerp(a, get(*b_), alpha_) : a;
    }
  }
  template <class T>
  void hold(T v) {
    if (hold_ok_) *out_++ = Cell{std::move(v)};
    else *out_++ = std::monostate{};
  }

  Cell* out_;
  const FeatureValue* b_;
  double alpha_;
  bool linear_ok_;
  bool hold_ok_;
};

}  // namespace

std::int64_t grid_step_us(double target_rate_hz) {
  if (!(target_rate_hz > 0) || !std::isfinite(target_rate_hz))
    throw Error(ErrorCode::invalid_argument, "target rate must be positive");
  const auto step = std::llround(1e6 / target_rate_hz);
  if (step < 1) throw Error(ErrorCode::invalid_argument, "target rate exceeds 1 MHz");
  return step;
}

std::vector<std::string_view> component_names(ValueType type) {
  switch (type) {
    case ValueType::Integer:
    case ValueType::Double:
    case ValueType::Axis: return {"value"};
    case ValueType::Vector2:
    case ValueType::Stick: return {"x", "y"};
    case ValueType::Vector3: return {"x", "y", "z"};
    case ValueType::Quaternion: return {"x", "y", "z", "w"};
    case ValueType::Button: return {"value", "pressed"};
    case ValueType::Key: return {"code", "pressed"};
    case ValueType::DPad: return {"up", "down", "left", "right"};
    case ValueType::Touch: return {"id", "x", "y", "pressure", "phase"};
    case ValueType::Extension: return {};
  }
  return {};
}

std::size_t ResampledTable::masked_cells() const {
  std::size_t n = 0;
  for (const auto& c : columns)
    for (const auto& cell : c.cells) n += std::holds_alternative<std::monostate>(cell);
  return n;
}

const Column* ResampledTable::find(std::string_view name) const {
  for (const auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

ResampledTable resample(const RecordSource& source, const FeatureSelector& selector,
                        const ResampleOptions& options) {
  const std::int64_t step = grid_step_us(options.target_rate_hz);

  ResampledTable table;
  table.target_rate_hz = options.target_rate_hz;
  table.step_us = step;

  std::map<std::pair<std::int64_t, std::string>, std::size_t> index;
  std::vector<Series> series;
  std::optional<std::int64_t> first_ts, last_ts;
  bool have_meta = false;

  while (auto record = source()) {
    if (auto* meta = std::get_if<RecordingMetadata>(&*record)) {
      if (!have_meta) table.metadata = std::move(*meta);
      have_meta = true;
      continue;
    }
    const auto& snap = std::get<Snapshot>(*record);
    if (!first_ts) first_ts = snap.timestamp_us;
    last_ts = snap.timestamp_us;
    for (const auto& dev : snap.devices) {
      for (const auto& f : dev.features) {
        auto term = selector.match(dev.name, f.name);
        if (!term) continue;
        const auto key = std::make_pair(dev.device_id, f.name);
        auto it = index.find(key);
        if (it == index.end()) {
          Series s;
          s.device_id = dev.device_id;
          s.device_name = dev.name;
          s.feature = f.name;
          s.type = type_of(f.value);
          s.term = *term;
          s.order = series.size();
          it = index.emplace(key, series.size()).first;
          series.push_back(std::move(s));
        }
        auto& s = series[it->second];
        // A feature that changes type mid-stream keeps its first type.
        if (type_of(f.value) != s.type) continue;
        if (!s.ts.empty() && snap.timestamp_us <= s.ts.back()) continue;
        s.ts.push_back(snap.timestamp_us);
        s.values.push_back(f.value);
      }
    }
  }

  std::erase_if(series, [](const Series& s) { return s.type == ValueType::Extension; });
  if (series.empty() || !first_ts)
    throw Error(ErrorCode::empty_table, "selection matched no tabular features");
  std::stable_sort(series.begin(), series.end(), [](const Series& a, const Series& b) {
    return a.term != b.term ? a.term < b.term : a.order < b.order;
  });

  double horizon_ms = kDefaultHorizonMs;
  if (options.staleness_horizon_ms) {
    horizon_ms = *options.staleness_horizon_ms;
  } else if (have_meta && table.metadata.polling_rate_hz > 0) {
    horizon_ms = 2.0 * 1000.0 / table.metadata.polling_rate_hz;
  }
  if (!(horizon_ms >= 0)) throw Error(ErrorCode::invalid_argument, "horizon must not be negative");
  table.staleness_horizon_ms = horizon_ms;
  const double horizon_us = horizon_ms * 1000.0;

  const std::int64_t span = *last_ts - *first_ts;
  const auto rows = static_cast<std::size_t>(span / step) + 1;
  table.ts_us.resize(rows);
  for (std::size_t r = 0; r < rows; ++r)
    table.ts_us[r] = *first_ts + static_cast<std::int64_t>(r) * step;

  // Device names label columns; repeated names get "#<id>".
  std::map<std::string, std::set<std::int64_t>> ids_by_name;
  for (const auto& s : series) ids_by_name[s.device_name].insert(s.device_id);

  for (const auto& s : series) {
    std::string label = s.device_name;
    if (ids_by_name[s.device_name].size() > 1) label += "#" + std::to_string(s.device_id);
    const auto names = component_names(s.type);
    const std::size_t first_col = table.columns.size();
    for (auto c : names) {
      Column col;
      col.name = label + "." + s.feature + "." + std::string(c);
      col.cells.resize(rows);
      table.columns.push_back(std::move(col));
    }

    std::vector<Cell> cells(names.size());
    std::size_t next = 0;  // first sample with ts > g
    for (std::size_t r = 0; r < rows; ++r) {
      const std::int64_t g = table.ts_us[r];
      while (next < s.ts.size() && s.ts[next] <= g) ++next;
      const bool has_prev = next > 0;
      const bool has_next = next < s.ts.size();
      const std::size_t prev = has_prev ? next - 1 : 0;

      const FeatureValue* base = nullptr;
      const FeatureValue* other = nullptr;
      double alpha = 0;
      bool linear_ok = false, hold_ok = false;

      if (options.mode == AlignMode::nearest) {
        const double d_prev = has_prev ? static_cast<double>(g - s.ts[prev]) : INFINITY;
        const double d_next = has_next ? static_cast<double>(s.ts[next] - g) : INFINITY;
        const bool use_prev = d_prev <= d_next;
        const double d = use_prev ? d_prev : d_next;
        if (d <= horizon_us) {
          base = &s.values[use_prev ? prev : next];
          linear_ok = hold_ok = true;
        }
      } else if (has_prev) {
        base = &s.values[prev];
        const double d_prev = static_cast<double>(g - s.ts[prev]);
        hold_ok = d_prev <= horizon_us;
        if (s.ts[prev] == g) {
          linear_ok = true;
        } else if (has_next && hold_ok && static_cast<double>(s.ts[next] - g) <= horizon_us) {
          linear_ok = true;
          other = &s.values[next];
          alpha = d_prev / static_cast<double>(s.ts[next] - s.ts[prev]);
        }
      }

      if (base) {
        std::visit(CellWriter(cells.data(), other, alpha, linear_ok, hold_ok), *base);
      } else {
        std::fill(cells.begin(), cells.end(), Cell{});
      }
      for (std::size_t c = 0; c < names.size(); ++c)
        table.columns[first_col + c].cells[r] = std::move(cells[c]);
    }
  }
  return table;
}

}  // namespace oxdr::analysis
