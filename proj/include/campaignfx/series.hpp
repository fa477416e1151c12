#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "campaignfx/error.hpp"

namespace campaignfx {

/// One daily poll of a venue's cumulative counters.
struct SnapshotReading {
    std::string venue_id;
    std::int64_t ts = 0;  // seconds since epoch, UTC
    std::int64_t checkins = 0;
    std::int64_t users = 0;
    std::int64_t specials = 0;
    std::int64_t tips = 0;
    std::int64_t likes = 0;
};

using SnapshotIndex = std::map<std::string, std::vector<SnapshotReading>>;

struct LineIssue {
    std::size_t line_no = 0;  // 1-based
    std::string message;
};

struct SnapshotParseResult {
    SnapshotIndex venues;
    std::vector<LineIssue> errors;     // MalformedRecord, line skipped
    std::vector<LineIssue> anomalies;  // duplicate timestamps with differing content

    std::size_t error_count() const noexcept { return errors.size(); }
};

/// Parses JSONL snapshot records. Readings come back sorted by ts per venue,
/// exact-duplicate timestamps collapsed to the last record seen.
SnapshotParseResult parse_snapshots(std::span<const std::string> lines);

/// CSV variant; the first line is a header naming the same columns as the
/// JSONL schema, in any order.
SnapshotParseResult parse_snapshots_csv(std::span<const std::string> lines);

enum class Counter { Checkins, Users, Tips, Likes };

/// Cumulative counter resampled onto an exact 24h grid anchored at the first reading.
struct DailyCumulative {
    std::string venue_id;
    std::int64_t origin_ts = 0;
    std::vector<double> values;
    std::size_t anomaly_count = 0;

    std::int64_t origin_day() const noexcept;
};

/// Linear interpolation onto ts_first + i*86400, no extrapolation past the last
/// reading. Raw decreases are counted (adjacent pairs) and clamped to the running
/// maximum. Throws InsufficientData for fewer than two readings.
DailyCumulative interpolate_daily(std::span<const SnapshotReading> readings,
                                  Counter counter = Counter::Checkins);

/// First-differenced daily counts. values[j] belongs to calendar day origin_day + j.
struct DailySeries {
    std::string venue_id;
    std::int64_t origin_day = 0;
    std::vector<double> values;

    std::int64_t end_day() const noexcept {
        return origin_day + static_cast<std::int64_t>(values.size());
    }
    /// Position of a calendar day within values (may be out of range).
    std::int64_t position(std::int64_t day) const noexcept { return day - origin_day; }
};

DailySeries daily_checkins(const DailyCumulative& dc);

struct PromotionPeriod;

struct SegmentRules {
    int k = 28;             // before-window length
    int min_duration = 7;   // minimum campaign length
    int w_min = 7;          // minimum after-window for long-term analysis
    int w_max = 28;
};

enum class IneligibleReason { ShortHistory, ShortCampaign };

std::string_view to_string(IneligibleReason reason) noexcept;

class IneligibleCampaign : public Error {
public:
    explicit IneligibleCampaign(IneligibleReason reason)
        : Error(ErrorKind::IneligibleCampaign, std::string(to_string(reason))), reason_(reason) {}
    IneligibleReason reason() const noexcept { return reason_; }

private:
    IneligibleReason reason_;
};

struct SegmentedSeries {
    std::vector<double> before;
    std::vector<double> during;
    std::optional<std::vector<double>> after;
    std::int64_t before_start = 0;  // positions within the source DailySeries
    std::int64_t during_start = 0;
    std::int64_t after_start = 0;

    bool long_term() const noexcept { return after.has_value(); }
};

/// Splits a daily series around a campaign. A campaign running past the end of
/// the data is truncated to the observed days.
SegmentedSeries segment(const DailySeries& s, std::int64_t start_day, std::int64_t end_day,
                        const SegmentRules& rules = {});
SegmentedSeries segment(const DailySeries& s, const PromotionPeriod& p,
                        const SegmentRules& rules = {});

/// All counters of one venue on the shared grid, plus the derived daily series.
struct VenueSeries {
    DailyCumulative checkins;
    DailyCumulative users;
    DailyCumulative tips;
    DailyCumulative likes;
    DailySeries daily;

    /// Grid value of a counter at the start of calendar day `day`, i.e. the
    /// cumulative total through day-1. Empty when the grid does not reach it.
    std::optional<double> cumulative_before(Counter counter, std::int64_t day) const;
};

VenueSeries build_venue_series(std::span<const SnapshotReading> readings);

std::vector<std::string> read_lines(std::istream& in);

}  // namespace campaignfx
