#include <doctest.h>

#include <numeric>
#include <string>
#include <vector>

#include "campaignfx/error.hpp"
#include "campaignfx/random.hpp"
#include "campaignfx/series.hpp"
#include "campaignfx/timeutil.hpp"

using namespace campaignfx;

namespace {

SnapshotReading reading(std::int64_t ts, std::int64_t checkins) {
    SnapshotReading r;
    r.venue_id = "v";
    r.ts = ts;
    r.checkins = checkins;
    r.users = checkins / 2;
    return r;
}

DailySeries series_of_length(std::size_t n, std::int64_t origin = 0) {
    DailySeries s;
    s.venue_id = "v";
    s.origin_day = origin;
    s.values.resize(n);
    std::iota(s.values.begin(), s.values.end(), 0.0);
    return s;
}

}  // namespace

TEST_CASE("timestamps parse in the accepted ISO-8601 shapes") {
    const std::int64_t day = days_from_civil(2012, 4, 2);
    CHECK(parse_iso8601("2012-04-02") == day * kSecondsPerDay);
    CHECK(parse_iso8601("2012-04-02T03:04:05Z") == day * kSecondsPerDay + 3 * 3600 + 4 * 60 + 5);
    CHECK(parse_iso8601("2012-04-02 03:04") == day * kSecondsPerDay + 3 * 3600 + 4 * 60);
    CHECK(parse_iso8601("2012-04-02T03:04:05.75+01:00") == day * kSecondsPerDay + 2 * 3600 + 4 * 60 + 5);
    CHECK(format_iso8601(parse_iso8601("2013-12-31T23:59:59Z")) == "2013-12-31T23:59:59Z");
    CHECK(format_iso_date(parse_iso_date("1999-02-28")) == "1999-02-28");
    CHECK(day_of(-1) == -1);
    CHECK_THROWS_AS(parse_iso8601("2012-13-01"), Error);
    CHECK_THROWS_AS(parse_iso8601("yesterday"), Error);
}

TEST_CASE("parse_snapshots sorts, keeps the last duplicate and skips malformed lines") {
    const std::vector<std::string> lines = {
        R"({"venue_id":"a","ts":"2012-01-02T00:00:00Z","checkins":5,"users":2,"specials":0,"tips":0,"likes":0})",
        R"({"venue_id":"a","ts":"2012-01-01T00:00:00Z","checkins":3,"users":1,"specials":0,"tips":0,"likes":0})",
        R"({"venue_id":"a","ts":"2012-01-02T00:00:00Z","checkins":6,"users":2,"specials":0,"tips":0,"likes":0})",
        R"({"venue_id":"b","ts":"2012-01-01T00:00:00Z","users":1,"specials":0,"tips":0,"likes":0})",
        R"(not json)",
        R"({"venue_id":"b","ts":"2012-01-01T00:00:00Z","checkins":-1,"users":1,"specials":0,"tips":0,"likes":0})",
    };
    const auto r = parse_snapshots(lines);
    REQUIRE(r.venues.count("a") == 1);
    const auto& a = r.venues.at("a");
    REQUIRE(a.size() == 2);
    CHECK(a[0].checkins == 3);
    CHECK(a[1].checkins == 6);  // later record wins
    CHECK(r.anomalies.size() == 1);
    CHECK(r.error_count() == 3);
    CHECK(r.errors[0].line_no == 4);
    CHECK(r.venues.count("b") == 0);
}

TEST_CASE("parse_snapshots_csv reads columns in any order") {
    const std::vector<std::string> lines = {
        "ts,venue_id,checkins,users,specials,tips,likes",
        "2012-01-02T00:00:00Z,x,4,2,0,0,1",
        "2012-01-01T00:00:00Z,x,1,1,0,0,0",
        "2012-01-03T00:00:00Z,x,oops,1,0,0,0",
    };
    const auto r = parse_snapshots_csv(lines);
    REQUIRE(r.venues.at("x").size() == 2);
    CHECK(r.venues.at("x")[0].checkins == 1);
    CHECK(r.venues.at("x")[1].likes == 1);
    CHECK(r.error_count() == 1);
}

TEST_CASE("interpolate_daily on an irregular poll") {
    const std::vector<SnapshotReading> rs = {reading(0, 10), reading(25 * 3600, 20)};
    const auto dc = interpolate_daily(rs);
    REQUIRE(dc.values.size() == 2);
    CHECK(dc.values[0] == doctest::Approx(10.0));
    CHECK(dc.values[1] == doctest::Approx(10.0 + 24.0 / 25.0 * 10.0));
    CHECK(dc.values[1] == doctest::Approx(19.6));
}

TEST_CASE("interpolate_daily is the identity on an exact 24h grid") {
    std::vector<SnapshotReading> rs;
    const std::vector<std::int64_t> counts = {3, 3, 8, 13, 21, 34};
    for (std::size_t i = 0; i < counts.size(); ++i)
        rs.push_back(reading(1'000'000 + static_cast<std::int64_t>(i) * kSecondsPerDay, counts[i]));
    const auto dc = interpolate_daily(rs);
    REQUIRE(dc.values.size() == counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) CHECK(dc.values[i] == static_cast<double>(counts[i]));
    CHECK(dc.origin_ts == 1'000'000);
    CHECK(dc.anomaly_count == 0);
}

TEST_CASE("interpolate_daily clamps decreases and counts raw decreasing pairs") {
    const std::vector<SnapshotReading> rs = {reading(0, 10), reading(kSecondsPerDay, 8),
                                             reading(2 * kSecondsPerDay, 12)};
    const auto dc = interpolate_daily(rs);
    REQUIRE(dc.values.size() == 3);
    CHECK(dc.values[0] == 10.0);
    CHECK(dc.values[1] == 10.0);
    CHECK(dc.values[2] == 12.0);
    CHECK(dc.anomaly_count == 1);

    // 10, 8, 9, 7: two raw decreasing pairs even though 9 is itself below the running max
    const std::vector<SnapshotReading> zigzag = {reading(0, 10), reading(kSecondsPerDay, 8),
                                                 reading(2 * kSecondsPerDay, 9), reading(3 * kSecondsPerDay, 7)};
    const auto z = interpolate_daily(zigzag);
    CHECK(z.anomaly_count == 2);
    for (std::size_t i = 1; i < z.values.size(); ++i) CHECK(z.values[i] >= z.values[i - 1]);
}

TEST_CASE("interpolate_daily does not extrapolate and needs two readings") {
    const std::vector<SnapshotReading> rs = {reading(0, 0), reading(kSecondsPerDay + 3600, 10),
                                             reading(2 * kSecondsPerDay + 7200, 20)};
    CHECK(interpolate_daily(rs).values.size() == 3);
    const std::vector<SnapshotReading> short_tail = {reading(0, 0), reading(2 * kSecondsPerDay - 1, 10)};
    CHECK(interpolate_daily(short_tail).values.size() == 2);
    const std::vector<SnapshotReading> one = {reading(0, 0)};
    CHECK_THROWS_AS(interpolate_daily(one), Error);
    try {
        (void)interpolate_daily(one);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InsufficientData);
    }
}

TEST_CASE("daily_checkins differences the cumulative grid") {
    DailyCumulative dc;
    dc.values = {10, 12, 15};
    CHECK(daily_checkins(dc).values == std::vector<double>{2, 3});
    dc.values = {5, 5, 5, 5};
    CHECK(daily_checkins(dc).values == std::vector<double>{0, 0, 0});
    dc.values = {0, 1.5, 4.0};
    CHECK(daily_checkins(dc).values == std::vector<double>{1.5, 2.5});
    dc.values = {1};
    CHECK_THROWS_AS(daily_checkins(dc), Error);
}

TEST_CASE("daily series origin is the calendar day of the first poll") {
    const std::int64_t day = days_from_civil(2012, 5, 1);
    const std::vector<SnapshotReading> rs = {reading(day * kSecondsPerDay + 7200, 0),
                                             reading((day + 1) * kSecondsPerDay + 7200, 4),
                                             reading((day + 2) * kSecondsPerDay + 7200, 9)};
    const auto vs = build_venue_series(rs);
    CHECK(vs.daily.origin_day == day);
    CHECK(vs.daily.values == std::vector<double>{4, 5});
    CHECK(vs.cumulative_before(Counter::Checkins, day + 1) == doctest::Approx(4.0));
    CHECK(vs.cumulative_before(Counter::Users, day + 2) == doctest::Approx(4.0));
    CHECK_FALSE(vs.cumulative_before(Counter::Checkins, day + 5).has_value());
}

TEST_CASE("telescoping: daily values sum to last minus first") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<SnapshotReading> rs;
        std::int64_t ts = 0, c = 0;
        for (int i = 0; i < 40; ++i) {
            rs.push_back(reading(ts, c));
            ts += 20 * 3600 + static_cast<std::int64_t>(uniform_index(rng, 8 * 3600));
            c += static_cast<std::int64_t>(uniform_index(rng, 20));
        }
        const auto dc = interpolate_daily(rs);
        const auto ds = daily_checkins(dc);
        const double total = std::accumulate(ds.values.begin(), ds.values.end(), 0.0);
        CHECK(total == doctest::Approx(dc.values.back() - dc.values.front()).epsilon(1e-12));
        for (double v : ds.values) CHECK(v >= 0.0);
    }
}

TEST_CASE("segment follows the k/w window rules") {
    SUBCASE("29 days remain -> after capped at 28") {
        const auto s = segment(series_of_length(70), 30, 40);
        CHECK(s.before.size() == 28);
        CHECK(s.during.size() == 11);
        REQUIRE(s.after.has_value());
        CHECK(s.after->size() == 28);
        CHECK(s.before.front() == 2.0);
        CHECK(s.during.front() == 30.0);
        CHECK(s.after->front() == 41.0);
    }
    SUBCASE("9 days remain") {
        const auto s = segment(series_of_length(50), 30, 40);
        REQUIRE(s.after.has_value());
        CHECK(s.after->size() == 9);
    }
    SUBCASE("4 days remain -> no long-term window") {
        const auto s = segment(series_of_length(45), 30, 40);
        CHECK_FALSE(s.after.has_value());
        CHECK_FALSE(s.long_term());
    }
    SUBCASE("calendar days map through origin_day") {
        const auto s = segment(series_of_length(70, 15000), 15030, 15040);
        CHECK(s.during.front() == 30.0);
        CHECK(s.during_start == 30);
    }
}

TEST_CASE("segment rejects short history and short campaigns") {
    auto reason = [](auto&& f) {
        try {
            f();
        } catch (const IneligibleCampaign& e) {
            return std::optional<IneligibleReason>(e.reason());
        }
        return std::optional<IneligibleReason>();
    };
    CHECK(reason([] { (void)segment(series_of_length(70), 20, 30); }) == IneligibleReason::ShortHistory);
    CHECK(reason([] { (void)segment(series_of_length(70), 30, 35); }) == IneligibleReason::ShortCampaign);
    CHECK(reason([] { (void)segment(series_of_length(33), 28, 40); }) == IneligibleReason::ShortCampaign);
    CHECK_FALSE(reason([] { (void)segment(series_of_length(35), 28, 40); }).has_value());
}

TEST_CASE("segments are disjoint and contiguous") {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        const auto n = 40 + uniform_index(rng, 100);
        const auto ts = static_cast<std::int64_t>(28 + uniform_index(rng, n - 34));
        const auto te = ts + 6 + static_cast<std::int64_t>(uniform_index(rng, 30));
        const auto s = segment(series_of_length(n), ts, te);
        std::vector<double> joined(s.before.begin(), s.before.end());
        joined.insert(joined.end(), s.during.begin(), s.during.end());
        if (s.after) joined.insert(joined.end(), s.after->begin(), s.after->end());
        for (std::size_t i = 1; i < joined.size(); ++i) CHECK(joined[i] == joined[i - 1] + 1.0);
        if (s.after) {
            CHECK(s.after->size() >= 7);
            CHECK(s.after->size() <= 28);
        }
    }
}
