#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oxdr/model.hpp"

namespace oxdr {

class TypeRegistry;

/// Rule identifiers reported by the sequence validator.
namespace rule {
inline constexpr std::string_view metadata_not_first = "metadata_not_first";
inline constexpr std::string_view metadata_missing = "metadata_missing";
inline constexpr std::string_view duplicate_metadata = "duplicate_metadata";
inline constexpr std::string_view invalid_polling_rate = "invalid_polling_rate";
inline constexpr std::string_view end_before_start = "end_before_start";
inline constexpr std::string_view video_fields_inconsistent = "video_fields_inconsistent";
inline constexpr std::string_view negative_timestamp = "negative_timestamp";
inline constexpr std::string_view negative_frame = "negative_frame";
inline constexpr std::string_view non_monotonic_timestamp = "non_monotonic_timestamp";
inline constexpr std::string_view frame_regression = "frame_regression";
inline constexpr std::string_view duplicate_device = "duplicate_device";
inline constexpr std::string_view duplicate_feature = "duplicate_feature";
inline constexpr std::string_view empty_feature_name = "empty_feature_name";
inline constexpr std::string_view value_out_of_range = "value_out_of_range";
inline constexpr std::string_view non_finite_value = "non_finite_value";
inline constexpr std::string_view unregistered_extension = "unregistered_extension";
}  // namespace rule

struct Violation {
  std::size_t index = 0;  // position of the record in the sequence
  std::string rule;
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::size_t records = 0;
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::size_t count(std::string_view rule_id) const noexcept;
};

/// Checks one feature value's range constraints; returns a detail message for
/// the first problem found.
std::optional<std::string> check_value(const FeatureValue& value);

/// Incremental validator so arbitrarily long streams can be checked without
/// materializing them. validate_record_sequence is the batch form.
class SequenceValidator {
 public:
  /// When a registry is supplied, Extension values whose type is not
  /// registered are reported.
  explicit SequenceValidator(const TypeRegistry* registry = nullptr)
      : registry_(registry) {}

  void feed(const Record& record);
  /// Adds end-of-sequence checks (missing metadata) and returns the report.
  ValidationReport finish();

 private:
  void check_metadata(const RecordingMetadata& meta, std::size_t index);
  void check_snapshot(const Snapshot& snap, std::size_t index);
  void add(std::size_t index, std::string_view rule_id, std::string detail);

  const TypeRegistry* registry_;
  ValidationReport report_;
  std::size_t index_ = 0;
  bool seen_metadata_ = false;
  std::optional<std::int64_t> last_ts_;
  std::optional<std::int64_t> last_frame_;
};

ValidationReport validate_record_sequence(std::span<const Record> records,
                                          const TypeRegistry* registry = nullptr);

}  // namespace oxdr
