#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace campaignfx {

inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Days since 1970-01-01 for a proleptic Gregorian civil date.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept {
    return a / b - ((a % b != 0) && ((a < 0) != (b < 0)));
}

/// Calendar (UTC) day index of a timestamp in seconds.
constexpr std::int64_t day_of(std::int64_t ts) noexcept { return floor_div(ts, kSecondsPerDay); }

/// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS[.fff]]" with optional "Z" or
/// "+HH:MM"/"-HH:MM" suffix into seconds since the epoch (UTC).
/// Throws campaignfx::Error(MalformedRecord) on bad input.
std::int64_t parse_iso8601(std::string_view text);

/// Parses a date ("YYYY-MM-DD", time part ignored) into a day index.
std::int64_t parse_iso_date(std::string_view text);

std::string format_iso8601(std::int64_t ts);
std::string format_iso_date(std::int64_t day);

}  // namespace campaignfx
