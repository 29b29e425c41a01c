#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace oxdr {

/// Stable error taxonomy shared by the codec, registry, recorder and analysis
/// layers. The string form (see to_string) is what tools print and what the
/// malformed-fixture corpus is keyed on.
enum class ErrorCode {
  malformed_record,
  unknown_kind,
  unknown_type,
  truncated,
  unregistered_extension,
  non_finite,
  duplicate_name,
  reserved_name,
  duplicate_device,
  invalid_argument,
  clock_regression,
  sink_failure,
  empty_table,
  ambiguous_participant,
  missing_participant,
  io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by stream decoders. Carries the position of the offending record:
/// the byte offset where the record starts, and for ndjson the 1-based line.
class DecodeError : public Error {
 public:
  DecodeError(ErrorCode code, const std::string& what, std::uint64_t byte_offset,
              std::optional<std::uint64_t> line = std::nullopt)
      : Error(code, what), byte_offset_(byte_offset), line_(line) {}

  std::uint64_t byte_offset() const noexcept { return byte_offset_; }
  std::optional<std::uint64_t> line() const noexcept { return line_; }

 private:
  std::uint64_t byte_offset_;
  std::optional<std::uint64_t> line_;
};

}  // namespace oxdr
