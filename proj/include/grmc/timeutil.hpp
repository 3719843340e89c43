#ifndef GRMC_TIMEUTIL_HPP
#define GRMC_TIMEUTIL_HPP

#include <cstdint>
#include <string>

namespace grmc {

/// Seconds between consecutive rows of an observation matrix (10 minutes).
constexpr std::int64_t kStepSeconds = 600;

/// Rows in one week slice: 7 days at 10-minute resolution, both endpoints
/// included (1008 intervals, 1009 samples).
constexpr int kWeekRows = 1009;

/// Parses "YYYY-MM-DDTHH:MM:SSZ" (UTC) to Unix seconds.
/// Throws ValidationError on malformed input.
std::int64_t parse_iso8601_utc(const std::string& s);

/// Formats Unix seconds as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601_utc(std::int64_t t);

}  // namespace grmc

#endif
