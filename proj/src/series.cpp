#include "campaignfx/series.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "campaignfx/campaign.hpp"
#include "campaignfx/io.hpp"
#include "campaignfx/timeutil.hpp"

namespace campaignfx {
namespace {

using json = nlohmann::json;

std::int64_t require_count(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw Error(ErrorKind::MalformedRecord, std::string("missing '") + key + "'");
    if (!it->is_number_integer() && !(it->is_number_float() && it->get<double>() == std::floor(it->get<double>())))
        throw Error(ErrorKind::MalformedRecord, std::string("'") + key + "' is not an integer");
    const auto v = it->is_number_integer() ? it->get<std::int64_t>()
                                           : static_cast<std::int64_t>(it->get<double>());
    if (v < 0) throw Error(ErrorKind::MalformedRecord, std::string("'") + key + "' is negative");
    return v;
}

std::int64_t parse_count_text(std::string_view text, const char* key) {
    text = io::trim(text);
    std::int64_t v = 0;
    if (text.empty()) throw Error(ErrorKind::MalformedRecord, std::string("missing '") + key + "'");
    for (char c : text) {
        if (c < '0' || c > '9')
            throw Error(ErrorKind::MalformedRecord, std::string("'") + key + "' is not a non-negative integer");
        v = v * 10 + (c - '0');
    }
    return v;
}

std::int64_t parse_ts_text(std::string_view text) {
    text = io::trim(text);
    if (!text.empty() && std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return parse_count_text(text, "ts");
    return parse_iso8601(text);
}

bool same_content(const SnapshotReading& a, const SnapshotReading& b) {
    return a.checkins == b.checkins && a.users == b.users && a.specials == b.specials &&
           a.tips == b.tips && a.likes == b.likes;
}

struct Tagged {
    SnapshotReading reading;
    std::size_t line_no;
};

SnapshotParseResult finish(std::vector<Tagged> records, std::vector<LineIssue> errors) {
    SnapshotParseResult result;
    result.errors = std::move(errors);
    // stable sort keeps file order among equal timestamps, so "last" means last in file
    std::stable_sort(records.begin(), records.end(), [](const Tagged& a, const Tagged& b) {
        if (a.reading.venue_id != b.reading.venue_id) return a.reading.venue_id < b.reading.venue_id;
        return a.reading.ts < b.reading.ts;
    });
    for (std::size_t i = 0; i < records.size(); ++i) {
        const bool dup_next = i + 1 < records.size() &&
                              records[i + 1].reading.venue_id == records[i].reading.venue_id &&
                              records[i + 1].reading.ts == records[i].reading.ts;
        if (dup_next) {
            if (!same_content(records[i].reading, records[i + 1].reading)) {
                result.anomalies.push_back(
                    {records[i + 1].line_no, "duplicate timestamp for venue '" + records[i].reading.venue_id +
                                                 "' with differing counters; keeping later record"});
            }
            continue;
        }
        auto& venue = result.venues[records[i].reading.venue_id];
        venue.push_back(std::move(records[i].reading));
    }
    return result;
}

double counter_value(const SnapshotReading& r, Counter c) {
    switch (c) {
        case Counter::Checkins: return static_cast<double>(r.checkins);
        case Counter::Users: return static_cast<double>(r.users);
        case Counter::Tips: return static_cast<double>(r.tips);
        case Counter::Likes: return static_cast<double>(r.likes);
    }
    return 0.0;
}

}  // namespace

SnapshotParseResult parse_snapshots(std::span<const std::string> lines) {
    std::vector<Tagged> records;
    std::vector<LineIssue> errors;
    records.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = io::trim(lines[i]);
        if (line.empty()) continue;
        try {
            const json obj = json::parse(line);
            if (!obj.is_object()) throw Error(ErrorKind::MalformedRecord, "not a JSON object");
            SnapshotReading r;
            const auto id = obj.find("venue_id");
            if (id == obj.end() || !id->is_string() || id->get<std::string>().empty())
                throw Error(ErrorKind::MalformedRecord, "missing 'venue_id'");
            r.venue_id = id->get<std::string>();
            const auto ts = obj.find("ts");
            if (ts == obj.end()) throw Error(ErrorKind::MalformedRecord, "missing 'ts'");
            if (ts->is_string()) {
                r.ts = parse_iso8601(ts->get<std::string>());
            } else if (ts->is_number_integer()) {
                r.ts = ts->get<std::int64_t>();
            } else {
                throw Error(ErrorKind::MalformedRecord, "'ts' must be an ISO-8601 string");
            }
            r.checkins = require_count(obj, "checkins");
            r.users = require_count(obj, "users");
            r.specials = require_count(obj, "specials");
            r.tips = require_count(obj, "tips");
            r.likes = require_count(obj, "likes");
            records.push_back({std::move(r), i + 1});
        } catch (const json::exception& e) {
            errors.push_back({i + 1, std::string("MalformedRecord: ") + e.what()});
        } catch (const Error& e) {
            errors.push_back({i + 1, e.what()});
        }
    }
    return finish(std::move(records), std::move(errors));
}

SnapshotParseResult parse_snapshots_csv(std::span<const std::string> lines) {
    std::vector<Tagged> records;
    std::vector<LineIssue> errors;
    if (lines.empty()) return finish({}, {});
    static constexpr std::array<const char*, 7> kColumns = {"venue_id", "ts",   "checkins", "users",
                                                            "specials", "tips", "likes"};
    std::array<int, 7> where{};
    where.fill(-1);
    const auto header = io::split_csv(lines[0]);
    for (std::size_t c = 0; c < header.size(); ++c) {
        for (std::size_t k = 0; k < kColumns.size(); ++k)
            if (io::trim(header[c]) == kColumns[k]) where[k] = static_cast<int>(c);
    }
    for (std::size_t k = 0; k < kColumns.size(); ++k) {
        if (where[k] < 0) {
            errors.push_back({1, std::string("MalformedRecord: header lacks '") + kColumns[k] + "'"});
            return finish({}, std::move(errors));
        }
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (io::trim(lines[i]).empty()) continue;
        try {
            const auto f = io::split_csv(lines[i]);
            auto field = [&](std::size_t k) -> std::string_view {
                const auto idx = static_cast<std::size_t>(where[k]);
                if (idx >= f.size()) throw Error(ErrorKind::MalformedRecord, std::string("missing '") + kColumns[k] + "'");
                return f[idx];
            };
            SnapshotReading r;
            r.venue_id = std::string(io::trim(field(0)));
            if (r.venue_id.empty()) throw Error(ErrorKind::MalformedRecord, "missing 'venue_id'");
            r.ts = parse_ts_text(field(1));
            r.checkins = parse_count_text(field(2), kColumns[2]);
            r.users = parse_count_text(field(3), kColumns[3]);
            r.specials = parse_count_text(field(4), kColumns[4]);
            r.tips = parse_count_text(field(5), kColumns[5]);
            r.likes = parse_count_text(field(6), kColumns[6]);
            records.push_back({std::move(r), i + 1});
        } catch (const Error& e) {
            errors.push_back({i + 1, e.what()});
        }
    }
    return finish(std::move(records), std::move(errors));
}

std::int64_t DailyCumulative::origin_day() const noexcept { return day_of(origin_ts); }

DailyCumulative interpolate_daily(std::span<const SnapshotReading> readings, Counter counter) {
    if (readings.size() < 2)
        throw Error(ErrorKind::InsufficientData, "need at least 2 readings to interpolate");
    DailyCumulative out;
    out.venue_id = readings.front().venue_id;
    out.origin_ts = readings.front().ts;

    std::vector<double> clamped(readings.size());
    double running = counter_value(readings[0], counter);
    clamped[0] = running;
    for (std::size_t i = 1; i < readings.size(); ++i) {
        const double raw = counter_value(readings[i], counter);
        if (raw < counter_value(readings[i - 1], counter)) ++out.anomaly_count;
        running = std::max(running, raw);
        clamped[i] = running;
    }

    const std::int64_t last = readings.back().ts;
    std::size_t seg = 0;
    for (std::int64_t t = out.origin_ts; t <= last; t += kSecondsPerDay) {
        while (seg + 1 < readings.size() && readings[seg + 1].ts < t) ++seg;
        if (readings[seg].ts == t || seg + 1 == readings.size()) {
            out.values.push_back(clamped[seg]);
            continue;
        }
        const auto t0 = static_cast<double>(readings[seg].ts);
        const auto t1 = static_cast<double>(readings[seg + 1].ts);
        const double frac = (static_cast<double>(t) - t0) / (t1 - t0);
        out.values.push_back(clamped[seg] + frac * (clamped[seg + 1] - clamped[seg]));
    }
    return out;
}

DailySeries daily_checkins(const DailyCumulative& dc) {
    if (dc.values.size() < 2)
        throw Error(ErrorKind::InsufficientData, "need at least 2 grid points to difference");
    DailySeries s;
    s.venue_id = dc.venue_id;
    s.origin_day = dc.origin_day();
    s.values.resize(dc.values.size() - 1);
    for (std::size_t i = 0; i + 1 < dc.values.size(); ++i)
        s.values[i] = std::max(0.0, dc.values[i + 1] - dc.values[i]);
    return s;
}

std::string_view to_string(IneligibleReason reason) noexcept {
    return reason == IneligibleReason::ShortHistory ? "ShortHistory" : "ShortCampaign";
}

SegmentedSeries segment(const DailySeries& s, std::int64_t start_day, std::int64_t end_day,
                        const SegmentRules& rules) {
    const auto n = static_cast<std::int64_t>(s.values.size());
    const std::int64_t ts = s.position(start_day);
    if (end_day - start_day + 1 < rules.min_duration) throw IneligibleCampaign(IneligibleReason::ShortCampaign);
    if (ts < rules.k) throw IneligibleCampaign(IneligibleReason::ShortHistory);
    const std::int64_t te = std::min(s.position(end_day), n - 1);
    if (te - ts + 1 < rules.min_duration) throw IneligibleCampaign(IneligibleReason::ShortCampaign);

    SegmentedSeries out;
    const auto at = [&](std::int64_t pos) { return s.values.begin() + pos; };
    out.before_start = ts - rules.k;
    out.before.assign(at(ts - rules.k), at(ts));
    out.during_start = ts;
    out.during.assign(at(ts), at(te + 1));
    const std::int64_t available = n - (te + 1);
    out.after_start = te + 1;
    if (available >= rules.w_min) {
        const std::int64_t w = std::min<std::int64_t>(rules.w_max, available);
        out.after.emplace(at(te + 1), at(te + 1 + w));
    }
    return out;
}

SegmentedSeries segment(const DailySeries& s, const PromotionPeriod& p, const SegmentRules& rules) {
    return segment(s, p.start_day, p.end_day, rules);
}

std::optional<double> VenueSeries::cumulative_before(Counter counter, std::int64_t day) const {
    const DailyCumulative* dc = &checkins;
    switch (counter) {
        case Counter::Checkins: break;
        case Counter::Users: dc = &users; break;
        case Counter::Tips: dc = &tips; break;
        case Counter::Likes: dc = &likes; break;
    }
    const std::int64_t idx = day - dc->origin_day();
    if (idx < 0 || idx >= static_cast<std::int64_t>(dc->values.size())) return std::nullopt;
    return dc->values[static_cast<std::size_t>(idx)];
}

VenueSeries build_venue_series(std::span<const SnapshotReading> readings) {
    VenueSeries v;
    v.checkins = interpolate_daily(readings, Counter::Checkins);
    v.users = interpolate_daily(readings, Counter::Users);
    v.tips = interpolate_daily(readings, Counter::Tips);
    v.likes = interpolate_daily(readings, Counter::Likes);
    v.daily = daily_checkins(v.checkins);
    return v;
}

std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(std::move(line));
    return lines;
}

}  // namespace campaignfx
