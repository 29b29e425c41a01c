#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "oxdr/codec.hpp"
#include "oxdr/model.hpp"

namespace oxdr::analysis {

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

/// Glob match where '*' matches any run of characters (including none).
/// No other metacharacters.
bool wildcard_match(std::string_view pattern, std::string_view text) noexcept;

struct SelectorTerm {
  std::string device;   // device name pattern
  std::string feature;  // feature name pattern
};

class FeatureSelector {
 public:
  /// Throws Error(invalid_argument) if `terms` is empty.
  explicit FeatureSelector(std::vector<SelectorTerm> terms);

  /// ("*", "*").
  static FeatureSelector all();

  /// Parses "device:feature"; a bare "device" means "device:*".
  static FeatureSelector parse(std::span<const std::string> expressions);

  const std::vector<SelectorTerm>& terms() const noexcept { return terms_; }

  /// Index of the first matching term, if any.
  std::optional<std::size_t> match(std::string_view device, std::string_view feature) const;

 private:
  std::vector<SelectorTerm> terms_;
};

/// Pulls records from a stream; returns std::nullopt when exhausted.
using RecordSource = std::function<std::optional<Record>()>;

RecordSource from_reader(codec::RecordReader& reader);
RecordSource from_records(std::span<const Record> records);

// ---------------------------------------------------------------------------
// Summary
// ---------------------------------------------------------------------------

struct FeatureInfo {
  std::string name;
  ValueType type = ValueType::Integer;
  std::string extension_type;  // set for Extension values
  friend bool operator==(const FeatureInfo&, const FeatureInfo&) = default;
};

struct DeviceSummary {
  std::int64_t device_id = 0;
  std::string name;
  std::string serial;
  std::vector<FeatureInfo> features;  // in order of first appearance
  std::uint64_t snapshots_present = 0;
  double presence_ratio = 0;  // snapshots_present / total snapshots
  /// Snapshots after the device's first appearance that lack it.
  std::uint64_t missed_cycles = 0;
  /// Longest interval between consecutive appearances.
  std::int64_t max_gap_us = 0;
};

struct SessionSummary {
  RecordingMetadata metadata;
  std::uint64_t snapshots = 0;
  std::int64_t first_ts_us = 0;
  std::int64_t last_ts_us = 0;
  double duration_s = 0;           // last - first snapshot timestamp
  double effective_rate_hz = 0;    // (snapshots - 1) / duration_s
  std::optional<double> recorded_duration_s;  // end_time - start_time
  std::int64_t max_interval_us = 0;  // largest gap between snapshots
  std::vector<DeviceSummary> devices;  // by device id
};

/// Throws Error(malformed_record) if the stream has no metadata record.
SessionSummary summarize(const RecordSource& source);

/// Human-readable multi-line report.
std::string format_summary(const SessionSummary& summary);

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

struct FilterReport {
  std::uint64_t records = 0;
  std::uint64_t features_kept = 0;
  std::uint64_t features_dropped = 0;
  std::vector<std::string> warnings;
};

/// Keeps only selected (device, feature) pairs. Devices left with no
/// features are removed; snapshots are always kept, even if empty.
Record filter_record(const Record& record, const FeatureSelector& selector);

FilterReport filter(const RecordSource& source, const FeatureSelector& selector,
                    const std::function<void(const Record&)>& sink);

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

enum class AlignMode {
  interpolate,  // linear / normalized-linear / hold per value class
  nearest,      // closest sample within the horizon
};

struct ResampleOptions {
  double target_rate_hz = 0;
  /// Maximum distance to a contributing sample. Defaults to two polling
  /// periods of the source file, or 100 ms if the rate is unknown.
  std::optional<double> staleness_horizon_ms;
  AlignMode mode = AlignMode::interpolate;
};

/// A cell is std::monostate when masked invalid.
using Cell = std::variant<std::monostate, double, std::int64_t, bool, std::string>;

struct Column {
  std::string name;  // "<device>.<feature>.<component>"
  std::vector<Cell> cells;
};

struct ResampledTable {
  double target_rate_hz = 0;
  std::int64_t step_us = 0;
  double staleness_horizon_ms = 0;
  std::vector<std::int64_t> ts_us;
  std::vector<Column> columns;
  RecordingMetadata metadata;

  std::size_t rows() const noexcept { return ts_us.size(); }
  bool valid(std::size_t column, std::size_t row) const {
    return !std::holds_alternative<std::monostate>(columns[column].cells[row]);
  }
  std::size_t masked_cells() const;
  const Column* find(std::string_view name) const;
};

/// Grid spacing for a target rate: round(1e6 / rate) microseconds.
std::int64_t grid_step_us(double target_rate_hz);

/// Component names for a value type, in column order.
std::vector<std::string_view> component_names(ValueType type);

/// Throws Error(empty_table) when no selected feature can be tabulated and
/// Error(invalid_argument) for a non-positive rate.
ResampledTable resample(const RecordSource& source, const FeatureSelector& selector,
                        const ResampleOptions& options);

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvCounts {
  std::size_t rows = 0;     // data rows, header excluded
  std::size_t columns = 0;  // including ts_us
};

/// Header "ts_us,<columns...>", LF line endings, masked cells empty, doubles
/// in shortest round-trip form, RFC 4180 quoting where needed.
CsvCounts export_csv(const ResampledTable& table, std::ostream& out);

/// Quotes a field if it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

/// Minimal RFC 4180 reader (used to check exports). Returns rows of fields.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// ---------------------------------------------------------------------------
// Questionnaire join
// ---------------------------------------------------------------------------

/// Reads a ".responses.ndjson" sidecar: one response object per line.
/// Throws Error(malformed_record) naming the line on bad input.
std::vector<DemographicsResponse> read_responses(std::istream& in);
std::string encode_response(const DemographicsResponse& response);

struct JoinResult {
  std::string participant_id;
  std::optional<DemographicsResponse> response;  // nullopt -> unmatched
  bool matched() const noexcept { return response.has_value(); }
};

/// Finds the response for `participant_id`. Throws Error(missing_participant)
/// if the id is empty and Error(ambiguous_participant) if more than one
/// response carries it.
JoinResult match_participant(std::string_view participant_id,
                             std::span<const DemographicsResponse> responses);

/// Appends constant columns: "participant_id", "demographics.status"
/// ("matched"/"unmatched") and the response fields (empty when unmatched).
JoinResult join_questionnaire(ResampledTable& table,
                              std::span<const DemographicsResponse> responses);

struct AnnotatedSummary {
  SessionSummary summary;
  JoinResult join;
};

AnnotatedSummary join_questionnaire(SessionSummary summary,
                                    std::span<const DemographicsResponse> responses);

std::string format_join(const JoinResult& join);

}  // namespace oxdr::analysis
