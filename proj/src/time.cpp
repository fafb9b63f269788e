#include "euc/time.hpp"

#include <charconv>
#include <cstdio>

#include "euc/error.hpp"

namespace euc {

namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw Error("malformed-timestamp", "bad timestamp: " + std::string(text));
  }
  return value;
}

}  // namespace

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const bool date_only = text.size() == 10;
  if (!date_only && !(text.size() == 20 && text[19] == 'Z' && text[10] == 'T')) {
    throw Error("malformed-timestamp", "bad timestamp: " + std::string(text));
  }
  if (text[4] != '-' || text[7] != '-') {
    throw Error("malformed-timestamp", "bad timestamp: " + std::string(text));
  }
  const year_month_day ymd{year{parse_fixed(text, 0, 4)},
                           month{static_cast<unsigned>(parse_fixed(text, 5, 2))},
                           day{static_cast<unsigned>(parse_fixed(text, 8, 2))}};
  if (!ymd.ok()) throw Error("malformed-timestamp", "invalid date: " + std::string(text));
  Timestamp result{sys_days{ymd}};
  if (!date_only) {
    if (text[13] != ':' || text[16] != ':') {
      throw Error("malformed-timestamp", "bad timestamp: " + std::string(text));
    }
    const int h = parse_fixed(text, 11, 2), m = parse_fixed(text, 14, 2), s = parse_fixed(text, 17, 2);
    if (h > 23 || m > 59 || s > 59) {
      throw Error("malformed-timestamp", "bad time of day: " + std::string(text));
    }
    result += hours{h} + minutes{m} + seconds{s};
  }
  return result;
}

std::chrono::sys_days to_day(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

Timestamp now_utc() {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

}  // namespace euc
