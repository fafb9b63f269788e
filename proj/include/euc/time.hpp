#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace euc {

/// UTC instant with seconds precision.
using Timestamp = std::chrono::sys_seconds;

/// "2024-01-31T09:30:00Z"
std::string format_timestamp(Timestamp t);

/// Accepts "YYYY-MM-DDTHH:MM:SSZ" and the date-only form "YYYY-MM-DD".
/// Throws euc::Error("malformed-timestamp").
Timestamp parse_timestamp(std::string_view text);

std::chrono::sys_days to_day(Timestamp t);

Timestamp now_utc();

}  // namespace euc
