#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "campaignfx/campaign.hpp"
#include "campaignfx/cohort.hpp"
#include "campaignfx/error.hpp"
#include "campaignfx/series.hpp"
#include "campaignfx/synth.hpp"

using namespace campaignfx;

namespace {

SynthConfig small(std::uint64_t seed = 1) {
    SynthConfig c;
    c.n_venues = 60;
    c.days = 90;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("config validation") {
    SynthConfig c = small();
    CHECK_NOTHROW(c.validate());
    c.days = 62;
    CHECK_THROWS_AS(c.validate(), Error);
    c = small();
    c.weekly_seasonality_amp = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = small();
    c.promo_fraction = 0.9;
    c.zero_venue_fraction = 0.2;
    CHECK_THROWS_AS(c.validate(), Error);
    c = small();
    c.effect_multiplier = -0.1;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("weekly seasonality has period 7 and mean 1") {
    double sum = 0;
    for (int d = 0; d < 7; ++d) {
        sum += seasonality(0.3, 15000 + d);
        CHECK(seasonality(0.3, 15000 + d) == seasonality(0.3, 15007 + d));
        CHECK(seasonality(0.3, -3 + d) == seasonality(0.3, 4 + d));
    }
    CHECK(sum / 7 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(seasonality(0.0, 12345) == 1.0);
}

TEST_CASE("zero venue count is exact") {
    SynthConfig c;
    c.n_venues = 1000;
    c.days = 63;
    c.zero_venue_fraction = 0.1;
    const SynthGenerator gen(c);
    int zeros = 0, promoted = 0;
    for (std::size_t i = 0; i < gen.size(); ++i) {
        const auto v = gen.venue(i);
        if (v.truth.zero) {
            ++zeros;
            CHECK_FALSE(v.truth.promoted);
            CHECK(v.readings.front().checkins == v.readings.back().checkins);
        }
        promoted += v.truth.promoted ? 1 : 0;
    }
    CHECK(zeros == 100);
    CHECK(promoted == 200);
}

TEST_CASE("generated venues are well formed") {
    SynthConfig c = small(3);
    c.effect_multiplier = 0.4;
    c.platform_trend_per_day = 0.002;
    c.trend_sd_per_day = 0.005;
    const SynthGenerator gen(c);
    for (std::size_t i = 0; i < gen.size(); ++i) {
        const auto v = gen.venue(i);
        CHECK(v.profile.venue_id == gen.venue_id(i));
        CHECK(v.profile.lat >= c.lat_min);
        CHECK(v.profile.lat <= c.lat_max);
        CHECK(v.profile.lon >= c.lon_min);
        CHECK(v.profile.lon <= c.lon_max);
        REQUIRE(v.readings.size() == static_cast<std::size_t>(c.days) + 1);
        for (std::size_t j = 1; j < v.readings.size(); ++j) {
            CHECK(v.readings[j].checkins >= v.readings[j - 1].checkins);
            CHECK(v.readings[j].users >= v.readings[j - 1].users);
            CHECK(v.readings[j].ts > v.readings[j - 1].ts);
        }
        for (const auto& r : v.readings) CHECK(r.users <= r.checkins);
        // polls sit within two hours of 02:00 on consecutive days
        for (std::size_t j = 0; j < v.readings.size(); ++j) {
            const auto offset = v.readings[j].ts - (c.start_day + static_cast<std::int64_t>(j)) * kSecondsPerDay;
            CHECK(offset >= 0);
            CHECK(offset <= 4 * 3600);
        }
        CHECK(interpolate_daily(v.readings).anomaly_count == 0);

        if (v.truth.promoted) {
            REQUIRE(v.truth.period.has_value());
            CHECK(v.truth.delta == c.effect_multiplier);
            CHECK(v.truth.d_exp > 0.0);
            const auto periods = build_promotion_periods(v.offers);
            REQUIRE(periods.size() == 1);
            CHECK(periods[0].start_day == v.truth.period->start_day);
            CHECK(periods[0].end_day == v.truth.period->end_day);
            CHECK(v.offers.size() >= 1);
            CHECK(v.offers.size() <= 3);
            CHECK(v.truth.period->start_day - c.start_day >= c.history_days);
            CHECK(v.truth.period->duration() >= c.campaign_min_days);
            CHECK(v.truth.period->end_day < c.start_day + c.days);
        } else {
            CHECK(v.offers.empty());
            CHECK_FALSE(v.truth.period.has_value());
        }
    }
}

TEST_CASE("expected d is zero exactly when there is no planted effect") {
    for (double delta : {0.0, 0.3}) {
        SynthConfig c = small(5);
        c.effect_multiplier = delta;
        const SynthGenerator gen(c);
        for (std::size_t i = 0; i < gen.size(); ++i) {
            const auto t = gen.venue(i).truth;
            if (!t.promoted) continue;
            if (delta == 0.0) {
                CHECK(t.d_exp == 0.0);
            } else {
                CHECK(t.d_exp > 0.0);
            }
        }
    }
}

TEST_CASE("corpus generation is reproducible and seed-sensitive") {
    const auto a = generate_corpus(small(11)), b = generate_corpus(small(11)), c = generate_corpus(small(12));
    CHECK(a.snapshot_lines == b.snapshot_lines);
    CHECK(a.offer_lines == b.offer_lines);
    CHECK(a.venue_lines == b.venue_lines);
    CHECK(a.snapshot_lines != c.snapshot_lines);

    const SynthGenerator gen(small(11));
    const auto v7 = gen.venue(7);
    CHECK(gen.venue(7).readings.back().checkins == v7.readings.back().checkins);
}

TEST_CASE("emitted lines parse back through the readers") {
    const auto corpus = generate_corpus(small(21));
    const auto snaps = parse_snapshots(corpus.snapshot_lines);
    CHECK(snaps.error_count() == 0);
    CHECK(snaps.venues.size() == 60);
    const auto offers = parse_offers(corpus.offer_lines);
    CHECK(offers.errors.empty());
    const auto profiles = parse_profiles(corpus.venue_lines);
    CHECK(profiles.errors.empty());
    CHECK(profiles.venues.size() == 60);
    CHECK(corpus.truth.venues.size() == 60);

    const SynthGenerator gen(small(21));
    const auto v0 = gen.venue(0);
    CHECK(snaps.venues.at(v0.profile.venue_id).back().checkins == v0.readings.back().checkins);
    CHECK(snaps.venues.at(v0.profile.venue_id).back().ts == v0.readings.back().ts);
}

TEST_CASE("analytic expected d") {
    // lambda 4, delta 0.5, no seasonality: means 4 and 6, pooled variance (4 + 6) / 2
    CHECK(stationary_expected_d(4.0, 0.5, 0.0, 28, 28) == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-12));
    CHECK(stationary_expected_d(3.0, 0.0, 0.2, 28, 28) == 0.0);
    for (double target : {0.2, 0.52, 0.8, 1.2}) {
        const double delta = delta_for_expected_d(3.0, target, 0.2, 28, 28);
        CHECK(stationary_expected_d(3.0, delta, 0.2, 28, 28) == doctest::Approx(target).epsilon(1e-9));
    }
    CHECK(delta_for_expected_d(3.0, 0.0, 0.2, 28, 28) == 0.0);
    CHECK_THROWS_AS(delta_for_expected_d(0.0, 0.5, 0.0, 28, 28), Error);
}

TEST_CASE("Monte Carlo oracle for d") {
    SUBCASE("null is centred on zero") {
        const auto o = oracle_expected_d(3.0, 0.0, 0.2, 28, 28, 5);
        CHECK(o.draws == 100000);
        CHECK(std::abs(o.mean) <= 3 * o.se);
    }
    SUBCASE("grows with delta") {
        double last = -1.0;
        for (double delta : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
            const auto o = oracle_expected_d(1.0, delta, 0.0, 28, 28, 9, 20000);
            CHECK(o.mean > last);
            last = o.mean;
        }
    }
    SUBCASE("reproducible across seeds") {
        const auto a = oracle_expected_d(1.0, 1.0, 0.0, 28, 28, 1);
        const auto b = oracle_expected_d(1.0, 1.0, 0.0, 28, 28, 2);
        CHECK(std::abs(a.mean - b.mean) <= 3 * std::hypot(a.se, b.se));
    }
    SUBCASE("agrees with the analytic value") {
        // Cohen's d is biased upward by roughly 3 / (4 df - 1) in small samples, about 1.4% here.
        const auto o = oracle_expected_d(4.0, 0.5, 0.0, 28, 28, 3);
        const double analytic = stationary_expected_d(4.0, 0.5, 0.0, 28, 28);
        MESSAGE("oracle " << o.mean << " +- " << o.se << ", analytic " << analytic);
        CHECK(std::abs(o.mean - analytic) / analytic < 0.03);
    }
    CHECK_THROWS_AS(oracle_expected_d(0.0, 0.5, 0.0, 28, 28), Error);
}
