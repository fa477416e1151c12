#include "campaignfx/timeutil.hpp"

#include <cstdio>

#include "campaignfx/error.hpp"

namespace campaignfx {
namespace {

[[noreturn]] void bad(std::string_view text) {
    throw Error(ErrorKind::MalformedRecord, "bad ISO-8601 timestamp '" + std::string(text) + "'");
}

int digits(std::string_view text, std::size_t pos, std::size_t count) {
    if (pos + count > text.size()) bad(text);
    int v = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') bad(text);
        v = v * 10 + (c - '0');
    }
    return v;
}

constexpr unsigned days_in_month(std::int64_t y, unsigned m) {
    constexpr unsigned table[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    return m == 2 && leap ? 29 : table[m - 1];
}

}  // namespace

std::int64_t parse_iso8601(std::string_view text) {
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') bad(text);
    const int y = digits(text, 0, 4);
    const int mo = digits(text, 5, 2);
    const int d = digits(text, 8, 2);
    if (mo < 1 || mo > 12 || d < 1 || static_cast<unsigned>(d) > days_in_month(y, mo)) bad(text);
    std::int64_t secs = days_from_civil(y, mo, d) * kSecondsPerDay;
    std::size_t pos = 10;
    if (pos == text.size()) return secs;
    if (text[pos] != 'T' && text[pos] != ' ') bad(text);
    ++pos;
    const int hh = digits(text, pos, 2);
    if (pos + 2 >= text.size() || text[pos + 2] != ':') bad(text);
    const int mm = digits(text, pos + 3, 2);
    pos += 5;
    int ss = 0;
    if (pos < text.size() && text[pos] == ':') {
        ss = digits(text, pos + 1, 2);
        pos += 3;
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) bad(text);
    secs += hh * 3600 + mm * 60 + ss;
    if (pos == text.size()) return secs;
    if (text[pos] == 'Z' && pos + 1 == text.size()) return secs;
    if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size() && text[pos + 3] == ':') {
        const int oh = digits(text, pos + 1, 2);
        const int om = digits(text, pos + 4, 2);
        const int offset = oh * 3600 + om * 60;
        return text[pos] == '+' ? secs - offset : secs + offset;
    }
    bad(text);
}

std::int64_t parse_iso_date(std::string_view text) { return day_of(parse_iso8601(text)); }

std::string format_iso_date(std::int64_t day) {
    // civil_from_days
    std::int64_t z = day + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u", static_cast<long long>(y), m, d);
    return buf;
}

std::string format_iso8601(std::int64_t ts) {
    const std::int64_t day = day_of(ts);
    const std::int64_t rem = ts - day * kSecondsPerDay;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_iso_date(day).c_str(),
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

}  // namespace campaignfx
