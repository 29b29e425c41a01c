#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oxdr::detail {

// Compact JSON emitter. Keys and values are written in call order, so output
// is byte-deterministic. Container sizes are accepted for interface parity
// with MsgpackWriter and ignored.
class JsonWriter {
 public:
  explicit JsonWriter(std::string& out) : out_(out) {}

  void begin_map(std::size_t);
  void end_map();
  void begin_array(std::size_t);
  void end_array();
  void key(std::string_view k);

  void null();
  void boolean(bool v);
  void integer(std::int64_t v);
  void real(double v);
  void string(std::string_view v);
  // Binary payloads are carried as base64 text in JSON.
  void bytes(std::span<const std::byte> v);

 private:
  void separate();
  void quoted(std::string_view v);

  std::string& out_;
  std::vector<bool> first_;
  bool after_key_ = false;
};

}  // namespace oxdr::detail
