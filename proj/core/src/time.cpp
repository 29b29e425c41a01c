#include "oxdr/time.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>

#include "oxdr/error.hpp"

namespace oxdr {
namespace {

// Proleptic Gregorian conversions (H. Hinnant's civil calendar algorithms).
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t year;
  unsigned month;
  unsigned day;
};

constexpr Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

constexpr std::int64_t kMicrosPerDay = 86'400'000'000;

bool read_digits(std::string_view text, std::size_t pos, std::size_t count,
                 unsigned& out) {
  if (pos + count > text.size()) return false;
  unsigned v = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
    v = v * 10 + static_cast<unsigned>(text[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::string format_utc(UtcTime t) {
  const std::int64_t us = t.time_since_epoch().count();
  std::int64_t days = us / kMicrosPerDay;
  std::int64_t rem = us % kMicrosPerDay;
  if (rem < 0) {
    rem += kMicrosPerDay;
    --days;
  }
  const Civil c = civil_from_days(days);
  const auto secs = rem / 1'000'000;
  const auto frac = rem % 1'000'000;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld.%06lldZ",
                static_cast<long long>(c.year), c.month, c.day,
                static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                static_cast<long long>(secs % 60), static_cast<long long>(frac));
  return buf;
}

UtcTime parse_utc(std::string_view text) {
  unsigned year = 0, month = 0, day = 0, hh = 0, mm = 0, ss = 0, frac = 0;
  const bool shape = text.size() == kUtcTimeWidth && text[4] == '-' && text[7] == '-' &&
                     text[10] == 'T' && text[13] == ':' && text[16] == ':' &&
                     text[19] == '.' && text[26] == 'Z';
  if (!shape || !read_digits(text, 0, 4, year) || !read_digits(text, 5, 2, month) ||
      !read_digits(text, 8, 2, day) || !read_digits(text, 11, 2, hh) ||
      !read_digits(text, 14, 2, mm) || !read_digits(text, 17, 2, ss) ||
      !read_digits(text, 20, 6, frac)) {
    throw Error(ErrorCode::invalid_argument,
                "timestamp '" + std::string(text) +
                    "' is not in YYYY-MM-DDTHH:MM:SS.ffffffZ form");
  }
  const Civil back = civil_from_days(days_from_civil(year, month, day));
  if (month < 1 || month > 12 || day < 1 || back.day != day || back.month != month ||
      hh > 23 || mm > 59 || ss > 59) {
    throw Error(ErrorCode::invalid_argument,
                "timestamp '" + std::string(text) + "' is out of range");
  }
  const std::int64_t us = days_from_civil(year, month, day) * kMicrosPerDay +
                          ((static_cast<std::int64_t>(hh) * 60 + mm) * 60 + ss) * 1'000'000 +
                          frac;
  return UtcTime{std::chrono::microseconds{us}};
}

UtcTime utc_now() {
  return std::chrono::time_point_cast<std::chrono::microseconds>(
      std::chrono::system_clock::now());
}

}  // namespace oxdr
