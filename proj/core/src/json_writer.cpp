#include "json_writer.hpp"

#include <charconv>

#include "base64.hpp"
#include "numfmt.hpp"

namespace oxdr::detail {

void JsonWriter::separate() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (!first_.empty()) {
    if (!first_.back()) out_ += ',';
    first_.back() = false;
  }
}

void JsonWriter::begin_map(std::size_t) {
  separate();
  out_ += '{';
  first_.push_back(true);
}

void JsonWriter::end_map() {
  first_.pop_back();
  out_ += '}';
}

void JsonWriter::begin_array(std::size_t) {
  separate();
  out_ += '[';
  first_.push_back(true);
}

void JsonWriter::end_array() {
  first_.pop_back();
  out_ += ']';
}

void JsonWriter::key(std::string_view k) {
  separate();
  quoted(k);
  out_ += ':';
  after_key_ = true;
}

void JsonWriter::null() {
  separate();
  out_ += "null";
}

void JsonWriter::boolean(bool v) {
  separate();
  out_ += v ? "true" : "false";
}

void JsonWriter::integer(std::int64_t v) {
  separate();
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out_.append(buf, res.ptr);
}

void JsonWriter::real(double v) {
  separate();
  append_json_double(out_, v);
}

void JsonWriter::string(std::string_view v) {
  separate();
  quoted(v);
}

void JsonWriter::bytes(std::span<const std::byte> v) {
  separate();
  out_ += '"';
  out_ += base64_encode(v);
  out_ += '"';
}

void JsonWriter::quoted(std::string_view v) {
  static constexpr char kHex[] = "0123456789abcdef";
  out_ += '"';
  for (char c : v) {
    const auto u = static_cast<unsigned char>(c);
    switch (c) {
      case '"': out_ += "\\\""; break;
      case '\\': out_ += "\\\\"; break;
      case '\n': out_ += "\\n"; break;
      case '\r': out_ += "\\r"; break;
      case '\t': out_ += "\\t"; break;
      case '\b': out_ += "\\b"; break;
      case '\f': out_ += "\\f"; break;
      default:
        if (u < 0x20 || u == 0x7f) {
          out_ += "\\u00";
          out_ += kHex[u >> 4];
          out_ += kHex[u & 15];
        } else {
          out_ += c;
        }
    }
  }
  out_ += '"';
}

}  // namespace oxdr::detail
