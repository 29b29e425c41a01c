#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace oxdr::detail {

// Shortest decimal that parses back to the same double.
void append_shortest(std::string& out, double value);

// As append_shortest, but always marks the token as floating point
// ("1.0" rather than "1") so JSON readers keep the value a float.
void append_json_double(std::string& out, double value);

std::optional<double> parse_double(std::string_view text) noexcept;

}  // namespace oxdr::detail
