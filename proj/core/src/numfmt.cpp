#include "numfmt.hpp"

#include <charconv>
#include <string>
#include <system_error>

namespace oxdr::detail {

// Shortest digits from to_chars in scientific form, laid out the way most
// languages print doubles: positional for exponents in [-4, 16), otherwise
// d.ddde[+-]XX.
void append_shortest(std::string& out, double value) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific);
  const std::string_view sci(buf, static_cast<std::size_t>(res.ptr - buf));
  const auto e_pos = sci.find('e');
  if (e_pos == std::string_view::npos) {  // inf / nan
    out.append(sci);
    return;
  }
  std::string_view mant = sci.substr(0, e_pos);
  int exp = 0;
  std::from_chars(sci.data() + e_pos + 1 + (sci[e_pos + 1] == '+'), sci.data() + sci.size(), exp);

  const bool negative = mant.front() == '-';
  if (negative) mant.remove_prefix(1);
  std::string digits;
  for (char c : mant)
    if (c != '.') digits += c;

  if (negative) out += '-';
  if (exp < -4 || exp >= 16) {
    out += digits[0];
    if (digits.size() > 1) {
      out += '.';
      out.append(digits, 1);
    }
    out += 'e';
    out += exp < 0 ? '-' : '+';
    const int a = exp < 0 ? -exp : exp;
    if (a < 10) out += '0';
    out += std::to_string(a);
  } else if (exp < 0) {
    out += "0.";
    out.append(static_cast<std::size_t>(-exp - 1), '0');
    out += digits;
  } else if (static_cast<std::size_t>(exp) + 1 >= digits.size()) {
    out += digits;
    out.append(static_cast<std::size_t>(exp) + 1 - digits.size(), '0');
  } else {
    out.append(digits, 0, static_cast<std::size_t>(exp) + 1);
    out += '.';
    out.append(digits, static_cast<std::size_t>(exp) + 1);
  }
}

void append_json_double(std::string& out, double value) {
  const std::size_t start = out.size();
  append_shortest(out, value);
  if (out.find_first_of(".eEn", start) == std::string::npos) out += ".0";
}

std::optional<double> parse_double(std::string_view text) noexcept {
  double v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

}  // namespace oxdr::detail
