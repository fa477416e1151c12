#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "campaignfx/error.hpp"
#include "campaignfx/features.hpp"
#include "campaignfx/random.hpp"
#include "campaignfx/timeutil.hpp"

using namespace campaignfx;

namespace {

constexpr std::int64_t kDay0 = 15000;

VenueProfile profile(const std::string& id, Category c, double lat, double lon) {
    return VenueProfile{id, c, lat, lon, false};
}

// Readings exactly on midnight, so grid value j is the reading of day kDay0 + j.
VenueSeries venue_series(const std::string& id, std::vector<std::int64_t> checkins, std::vector<std::int64_t> users) {
    std::vector<SnapshotReading> rs;
    for (std::size_t i = 0; i < checkins.size(); ++i) {
        SnapshotReading r;
        r.venue_id = id;
        r.ts = (kDay0 + static_cast<std::int64_t>(i)) * kSecondsPerDay;
        r.checkins = checkins[i];
        r.users = users[i];
        r.likes = static_cast<std::int64_t>(i);
        r.tips = 2 * static_cast<std::int64_t>(i);
        rs.push_back(r);
    }
    return build_venue_series(rs);
}

// Independent reference: metres on a sphere with the same radius, straight from the formula.
double reference_haversine(double lat1, double lon1, double lat2, double lon2) {
    const long double rad = 3.14159265358979323846264338327950288L / 180.0L;
    const long double dlat = (lat2 - lat1) * rad, dlon = (lon2 - lon1) * rad;
    const long double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                          std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return static_cast<double>(2.0L * 3958.7613L * std::asin(std::sqrt(std::min(1.0L, a))));
}

}  // namespace

TEST_CASE("haversine") {
    CHECK(haversine_miles(40.7, -73.9, 40.7, -73.9) == 0.0);
    // one degree of latitude
    CHECK(haversine_miles(0, 0, 1, 0) == doctest::Approx(kEarthRadiusMiles * M_PI / 180.0).epsilon(1e-12));
    CHECK(haversine_miles(0, 179.9, 0, -179.9) == doctest::Approx(kEarthRadiusMiles * 0.2 * M_PI / 180.0));
    Rng rng(2);
    std::uniform_real_distribution<double> lat(-89, 89), lon(-180, 180);
    for (int i = 0; i < 500; ++i) {
        const double a = lat(rng), b = lon(rng), c = lat(rng), d = lon(rng);
        CHECK(haversine_miles(a, b, c, d) == doctest::Approx(reference_haversine(a, b, c, d)).epsilon(1e-9));
        CHECK(haversine_miles(a, b, c, d) == haversine_miles(c, d, a, b));
    }
}

TEST_CASE("neighborhood examples") {
    const double lat0 = 40.75, lon0 = -73.95;
    // latitude offset that is exactly 0.5 miles along a meridian
    const double dlat = 0.5 / kEarthRadiusMiles * 180.0 / M_PI;
    std::vector<VenueProfile> vs = {profile("a", Category::Food, lat0, lon0),
                                    profile("edge", Category::Food, lat0 + dlat, lon0),
                                    profile("dup", Category::Shops, lat0, lon0),
                                    profile("out", Category::Food, lat0 + 2 * dlat, lon0),
                                    profile("lone", Category::Arts, 10.0, 10.0)};
    const SpatialIndex index(vs);
    auto ids = [&](const std::vector<std::size_t>& found) {
        std::set<std::string> out;
        for (auto i : found) out.insert(index.at(i).venue_id);
        return out;
    };
    const double edge = haversine_miles(lat0, lon0, lat0 + dlat, lon0);
    INFO("edge distance " << edge);
    const auto n = ids(neighborhood(vs[0], index, edge));
    CHECK(n == std::set<std::string>{"edge", "dup"});
    CHECK(neighborhood(vs[4], index).empty());
    CHECK(index.find("out") == 3);
    CHECK_FALSE(index.find("nope").has_value());
}

TEST_CASE("spatial index matches a brute-force scan near the poles and the antimeridian") {
    Rng rng(12);
    std::vector<VenueProfile> vs;
    std::uniform_real_distribution<double> jitter(-0.02, 0.02);
    const std::vector<std::pair<double, double>> centres = {{89.99, 0.0}, {0.0, 179.995}, {-89.995, 45.0}, {40.7, -73.9}};
    for (int i = 0; i < 800; ++i) {
        const auto& c = centres[i % centres.size()];
        double lon = c.second + jitter(rng);
        if (lon > 180) lon -= 360;
        vs.push_back(profile("v" + std::to_string(i), kAllCategories[i % 9], std::clamp(c.first + jitter(rng), -90.0, 90.0), lon));
    }
    const SpatialIndex index(vs);
    for (std::size_t q = 0; q < vs.size(); q += 7) {
        std::vector<std::size_t> brute;
        for (std::size_t j = 0; j < vs.size(); ++j)
            if (j != q && haversine_miles(vs[q].lat, vs[q].lon, vs[j].lat, vs[j].lon) <= 0.5) brute.push_back(j);
        CHECK(neighborhood(vs[q], index) == brute);
    }
}

TEST_CASE("venue features") {
    std::vector<std::int64_t> c(40), u(40);
    for (int i = 0; i < 40; ++i) {
        c[i] = 70 + i;
        u[i] = 40;
    }
    const auto s = venue_series("v", c, u);
    const std::vector<double> before(28, 2.0);
    const auto f = extract_venue_features(before, s, profile("v", Category::Arts, 0, 0), kDay0 + 30);
    CHECK(f.m_b == 2.0);
    CHECK(f.c_a == doctest::Approx(100.0));
    CHECK(f.loyalty == doctest::Approx(2.5));
    CHECK_FALSE(f.loyalty_missing);
    CHECK(f.likes == doctest::Approx(30.0));
    CHECK(f.tips == doctest::Approx(60.0));
    CHECK(f.category_onehot[static_cast<std::size_t>(Category::Arts)] == 1.0);
    double ones = 0;
    for (double x : f.category_onehot) ones += x;
    CHECK(ones == 1.0);

    const auto z = venue_series("z", c, std::vector<std::int64_t>(40, 0));
    const auto fz = extract_venue_features(before, z, profile("z", Category::Food, 0, 0), kDay0 + 30);
    CHECK(fz.loyalty == 1.0);
    CHECK(fz.loyalty_missing);

    CHECK_THROWS_AS(extract_venue_features(before, s, profile("v", Category::Arts, 0, 0), kDay0 + 45), Error);
}

TEST_CASE("promo features") {
    auto offer = [](OfferKind k, std::int64_t s, std::int64_t e) { return SpecialOffer{"v", "s", k, s, e}; };
    PromotionPeriod p{"v", 1, 10, {offer(OfferKind::Frequency, 1, 10)}};
    auto f = extract_promo_features(p);
    CHECK(f.duration == 10.0);
    CHECK(f.n_s == doctest::Approx(0.1));
    CHECK(f.xi[static_cast<std::size_t>(OfferKind::Frequency)] == 1.0);

    p.offers.push_back(offer(OfferKind::Frequency, 3, 5));
    f = extract_promo_features(p);
    CHECK(f.n_s == doctest::Approx(0.2));
    double bits = 0;
    for (double x : f.xi) bits += x;
    CHECK(bits == 1.0);

    PromotionPeriod multi{"v", 1, 14, {offer(OfferKind::Mayor, 1, 14), offer(OfferKind::Flash, 2, 2)}};
    f = extract_promo_features(multi);
    bits = 0;
    for (double x : f.xi) bits += x;
    CHECK(bits == 2.0);
    CHECK(f.n_s == doctest::Approx(2.0 / 14.0));
}

TEST_CASE("geo features") {
    auto ring = [](std::vector<Category> cats) {
        std::vector<VenueProfile> vs = {profile("c", Category::Food, 40.75, -73.95)};
        for (std::size_t i = 0; i < cats.size(); ++i)
            vs.push_back(profile("n" + std::to_string(i), cats[i], 40.75 + 0.0005 * (i + 1), -73.95));
        return vs;
    };
    const std::map<std::string, VenueSeries> no_series;
    {
        const SpatialIndex idx(ring({Category::Food, Category::Food, Category::Food, Category::Food}));
        const auto n = neighborhood(idx.at(0), idx);
        const auto g = extract_geo_features(idx.at(0), n, idx, no_series, kDay0);
        CHECK(g.density == 4.0);
        CHECK(g.competitiveness == 1.0);
        CHECK(g.entropy == 0.0);
    }
    {
        const SpatialIndex idx(ring({Category::Food, Category::Shops}));
        const auto g = extract_geo_features(idx.at(0), neighborhood(idx.at(0), idx), idx, no_series, kDay0);
        CHECK(g.entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        CHECK(g.competitiveness == 0.5);
    }
    {
        const SpatialIndex idx(ring({kAllCategories.begin(), kAllCategories.end()}));
        const auto g = extract_geo_features(idx.at(0), neighborhood(idx.at(0), idx), idx, no_series, kDay0);
        CHECK(g.entropy == doctest::Approx(std::log(9.0)).epsilon(1e-12));
        CHECK(g.density == 9.0);
        CHECK(g.competitiveness * g.density == 1.0);
    }
    {
        const SpatialIndex idx(ring({}));
        const auto g = extract_geo_features(idx.at(0), neighborhood(idx.at(0), idx), idx, no_series, kDay0);
        CHECK(g.isolated);
        CHECK(g.density == 0.0);
        CHECK(g.entropy == 0.0);
        CHECK(g.competitiveness == 0.0);
        CHECK(g.area_pop == 0.0);
    }
}

TEST_CASE("area popularity sums neighbour cumulative check-ins at the start day") {
    std::vector<VenueProfile> vs = {profile("c", Category::Food, 40.75, -73.95),
                                    profile("a", Category::Food, 40.751, -73.95),
                                    profile("b", Category::Shops, 40.752, -73.95)};
    std::map<std::string, VenueSeries> ss;
    std::vector<std::int64_t> ca(20), cb(20), u(20, 1);
    for (int i = 0; i < 20; ++i) {
        ca[i] = 3 * i;
        cb[i] = 7 * i + 1;
    }
    ss.emplace("a", venue_series("a", ca, u));
    ss.emplace("b", venue_series("b", cb, u));
    const SpatialIndex idx(vs);
    const auto g = extract_geo_features(idx.at(0), neighborhood(idx.at(0), idx), idx, ss, kDay0 + 10);
    CHECK(g.area_pop == doctest::Approx(30.0 + 71.0).epsilon(1e-12));
    // beyond the grid the last value is used
    const auto late = extract_geo_features(idx.at(0), neighborhood(idx.at(0), idx), idx, ss, kDay0 + 100);
    CHECK(late.area_pop == doctest::Approx(57.0 + 134.0));
}

TEST_CASE("entropy is invariant to neighbour order") {
    Rng rng(5);
    std::vector<VenueProfile> vs = {profile("c", Category::Food, 40.75, -73.95)};
    for (int i = 0; i < 30; ++i)
        vs.push_back(profile("n" + std::to_string(i), kAllCategories[uniform_index(rng, 9)], 40.75 + 0.0001 * i, -73.95));
    const SpatialIndex idx(vs);
    auto n = neighborhood(idx.at(0), idx);
    const std::map<std::string, VenueSeries> none;
    const auto g1 = extract_geo_features(idx.at(0), n, idx, none, kDay0);
    std::shuffle(n.begin(), n.end(), rng);
    const auto g2 = extract_geo_features(idx.at(0), n, idx, none, kDay0);
    CHECK(g1.entropy == doctest::Approx(g2.entropy).epsilon(1e-15));
    CHECK(g1.entropy <= std::log(9.0) + 1e-12);
    const double same = g1.competitiveness * g1.density;
    CHECK(same == std::round(same));
}

TEST_CASE("feature set names") {
    CHECK(parse_feature_sets("all") == (kVenueSet | kPromoSet | kGeoSet));
    CHECK(parse_feature_sets("Fv+Fg") == (kVenueSet | kGeoSet));
    CHECK(parse_feature_sets("p,g") == (kPromoSet | kGeoSet));
    CHECK(parse_feature_sets("q") == 0);
    CHECK(feature_sets_name(kVenueSet | kPromoSet | kGeoSet) == "Fp+Fv+Fg");
    CHECK(class_label(EffectLabel::SignificantIncrease) == 1);
    CHECK(class_label(EffectLabel::PoweredNull) == 0);
    CHECK(class_label(EffectLabel::SignificantDecrease) == 0);
    CHECK_FALSE(class_label(EffectLabel::Inconclusive).has_value());
}

TEST_CASE("feature CSV round-trips") {
    FeatureVector fv;
    fv.venue_id = "v12";
    fv.start_day = kDay0;
    fv.end_day = kDay0 + 9;
    fv.horizon = Horizon::LongTerm;
    fv.f_v.m_b = 2.25;
    fv.f_v.c_a = 1234.5;
    fv.f_v.loyalty = 1.75;
    fv.f_v.category_onehot[2] = 1.0;
    fv.f_p.duration = 10;
    fv.f_p.xi[1] = 1.0;
    fv.f_p.n_s = 0.1;
    fv.f_g.density = 3;
    fv.f_g.entropy = std::log(3.0);
    fv.observed_d = -0.125;
    fv.effect_label = EffectLabel::PoweredNull;
    const std::vector<std::string> lines = {feature_csv_header(), feature_csv_row(fv)};
    const auto t = parse_feature_csv(lines);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.ids[0] == "v12");
    CHECK(t.horizons[0] == Horizon::LongTerm);
    CHECK(t.labels[0] == EffectLabel::PoweredNull);
    CHECK(*t.observed_d[0] == -0.125);
    const auto vals = fv.values();
    REQUIRE(t.rows[0].size() == vals.size());
    REQUIRE(vals.size() == feature_columns().size());
    for (std::size_t i = 0; i < vals.size(); ++i) CHECK(t.rows[0][i] == doctest::Approx(vals[i]).epsilon(1e-15));
    CHECK(lines[0].substr(lines[0].rfind(',') + 1) == "label");
}
