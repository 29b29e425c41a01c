#include "oxdr/analysis.hpp"
#include "oxdr/error.hpp"

namespace oxdr::analysis {

bool wildcard_match(std::string_view pattern, std::string_view text) noexcept {
  // Greedy two-pointer glob with single-star backtracking.
  std::size_t p = 0, t = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (p < pattern.size() && pattern[p] == text[t]) {
      ++p;
      ++t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

FeatureSelector::FeatureSelector(std::vector<SelectorTerm> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw Error(ErrorCode::invalid_argument, "feature selector is empty");
}

FeatureSelector FeatureSelector::all() {
  return FeatureSelector(std::vector<SelectorTerm>{{"*", "*"}});
}

FeatureSelector FeatureSelector::parse(std::span<const std::string> expressions) {
  std::vector<SelectorTerm> terms;
  for (const auto& e : expressions) {
    const auto colon = e.find(':');
    SelectorTerm term;
    if (colon == std::string::npos) {
      term = {e, "*"};
    } else {
      term = {e.substr(0, colon), e.substr(colon + 1)};
    }
    if (term.device.empty() || term.feature.empty())
      throw Error(ErrorCode::invalid_argument, "bad selector '" + e + "', expected device:feature");
    terms.push_back(std::move(term));
  }
  return FeatureSelector(std::move(terms));
}

std::optional<std::size_t> FeatureSelector::match(std::string_view device,
                                                  std::string_view feature) const {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (wildcard_match(terms_[i].device, device) && wildcard_match(terms_[i].feature, feature))
      return i;
  }
  return std::nullopt;
}

RecordSource from_reader(codec::RecordReader& reader) {
  return [&reader] { return reader.next(); };
}

RecordSource from_records(std::span<const Record> records) {
  return [records, i = std::size_t{0}]() mutable -> std::optional<Record> {
    if (i >= records.size()) return std::nullopt;
    return records[i++];
  };
}

namespace {

bool device_selected(const FeatureSelector& selector, std::string_view device) {
  for (const auto& t : selector.terms())
    if (wildcard_match(t.device, device)) return true;
  return false;
}

}  // namespace

Record filter_record(const Record& record, const FeatureSelector& selector) {
  const auto* snap = std::get_if<Snapshot>(&record);
  if (!snap) return record;
  Snapshot out;
  out.frame = snap->frame;
  out.timestamp_us = snap->timestamp_us;
  for (const auto& dev : snap->devices) {
    DeviceRecord kept;
    kept.device_id = dev.device_id;
    kept.name = dev.name;
    kept.serial = dev.serial;
    kept.device_timestamp_us = dev.device_timestamp_us;
    for (const auto& f : dev.features)
      if (selector.match(dev.name, f.name)) kept.features.push_back(f);
    const bool keep = !kept.features.empty() ||
                      (dev.features.empty() && device_selected(selector, dev.name));
    if (keep) out.devices.push_back(std::move(kept));
  }
  return out;
}

FilterReport filter(const RecordSource& source, const FeatureSelector& selector,
                    const std::function<void(const Record&)>& sink) {
  FilterReport report;
  while (auto record = source()) {
    if (const auto* snap = std::get_if<Snapshot>(&*record)) {
      for (const auto& d : snap->devices)
        for (const auto& f : d.features) {
          if (selector.match(d.name, f.name)) ++report.features_kept;
          else ++report.features_dropped;
        }
    }
    sink(filter_record(*record, selector));
    ++report.records;
  }
  if (report.features_kept == 0)
    report.warnings.push_back("selector matched no features; output contains metadata and empty snapshots only");
  return report;
}

}  // namespace oxdr::analysis
