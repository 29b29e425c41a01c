#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace oxdr {

using UtcTime = std::chrono::sys_time<std::chrono::microseconds>;

// Fixed-width ISO-8601 form, e.g. "2025-03-01T09:30:00.000250Z" (27 chars).
inline constexpr std::size_t kUtcTimeWidth = 27;

std::string format_utc(UtcTime t);

// Accepts exactly the fixed-width form produced by format_utc.
// Throws oxdr::Error(invalid_argument) otherwise.
UtcTime parse_utc(std::string_view text);

UtcTime utc_now();

}  // namespace oxdr
