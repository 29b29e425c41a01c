#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <streambuf>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace oxdr::detail {

// MessagePack emitter with the same call surface as JsonWriter. Integers use
// the smallest wire form; doubles are always float64 so payloads stay
// bit-exact.
class MsgpackWriter {
 public:
  explicit MsgpackWriter(std::string& out) : out_(out) {}

  void begin_map(std::size_t n);
  void end_map() {}
  void begin_array(std::size_t n);
  void end_array() {}
  void key(std::string_view k) { string(k); }

  void null();
  void boolean(bool v);
  void integer(std::int64_t v);
  void real(double v);
  void string(std::string_view v);
  void bytes(std::span<const std::byte> v);

 private:
  void byte(std::uint8_t b) { out_ += static_cast<char>(b); }
  void be16(std::uint16_t v);
  void be32(std::uint32_t v);
  void be64(std::uint64_t v);

  std::string& out_;
};

inline constexpr std::uint8_t kMsgpackNil = 0xc0;

// Reads one MessagePack value at a time from a streambuf into a JSON tree.
// Top-level nil bytes are treated as padding and skipped.
class MsgpackReader {
 public:
  enum class Status { value, end };

  struct Failure {
    enum class Kind { truncated, malformed } kind;
    std::string message;
  };

  MsgpackReader(std::streambuf& in, std::size_t max_value_bytes)
      : in_(in), max_bytes_(max_value_bytes) {}

  // Returns Status::end at a clean end of stream. Throws Failure.
  Status next(nlohmann::json& out);

  // Offset of the first byte of the value most recently returned.
  std::uint64_t value_offset() const noexcept { return value_offset_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  nlohmann::json read_value(int depth);
  std::uint8_t take();
  std::uint64_t take_be(int bytes);
  std::string take_string(std::size_t n);
  void charge(std::uint64_t n);

  std::streambuf& in_;
  std::size_t max_bytes_;
  std::size_t budget_ = 0;
  std::uint64_t offset_ = 0;
  std::uint64_t value_offset_ = 0;
};

}  // namespace oxdr::detail
