#include "campaignfx/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "campaignfx/io.hpp"
#include "campaignfx/stats.hpp"
#include "campaignfx/timeutil.hpp"

namespace campaignfx {

double haversine_miles(double lat1, double lon1, double lat2, double lon2) noexcept {
    constexpr double rad = std::numbers::pi / 180.0;
    const double dlat = (lat2 - lat1) * rad;
    const double dlon = (lon2 - lon1) * rad;
    const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusMiles * std::asin(std::min(1.0, std::sqrt(a)));
}

SpatialIndex::SpatialIndex(std::vector<VenueProfile> venues, double cell_deg)
    : venues_(std::move(venues)),
      cell_deg_(cell_deg),
      lon_cells_(static_cast<std::int64_t>(std::ceil(360.0 / cell_deg))) {
    if (!(cell_deg > 0.0)) throw Error(ErrorKind::InvalidConfig, "cell size must be positive");
    for (std::size_t i = 0; i < venues_.size(); ++i) {
        const auto& v = venues_[i];
        const auto lat_cell = static_cast<std::int64_t>(std::floor(v.lat / cell_deg_));
        const auto lon_cell = static_cast<std::int64_t>(std::floor((v.lon + 180.0) / cell_deg_));
        cells_[key(lat_cell, lon_cell)].push_back(i);
        by_id_.emplace(v.venue_id, i);
    }
}

std::int64_t SpatialIndex::key(std::int64_t lat_cell, std::int64_t lon_cell) const noexcept {
    const std::int64_t wrapped = ((lon_cell % lon_cells_) + lon_cells_) % lon_cells_;
    return lat_cell * (lon_cells_ + 1) + wrapped;
}

std::optional<std::size_t> SpatialIndex::find(const std::string& venue_id) const {
    const auto it = by_id_.find(venue_id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::size_t> SpatialIndex::within(double lat, double lon, double r_miles) const {
    constexpr double deg = 180.0 / std::numbers::pi;
    const double angular = r_miles / kEarthRadiusMiles;
    // small margin so boundary points are never lost to rounding in the cell bounds
    const double dlat = angular * deg * 1.0001 + 1e-9;
    const double lat_lo = lat - dlat;
    const double lat_hi = lat + dlat;
    const double max_abs_lat = std::max(std::abs(lat_lo), std::abs(lat_hi));
    std::int64_t lon_first = 0;
    std::int64_t lon_last = lon_cells_ - 1;
    if (max_abs_lat < 89.0 && angular < std::numbers::pi / 4) {
        const double ratio = std::sin(angular) / std::cos(max_abs_lat / deg);
        if (ratio < 1.0) {
            const double dlon = std::asin(ratio) * deg * 1.0001 + 1e-9;
            lon_first = static_cast<std::int64_t>(std::floor((lon + 180.0 - dlon) / cell_deg_));
            lon_last = static_cast<std::int64_t>(std::floor((lon + 180.0 + dlon) / cell_deg_));
            if (lon_last - lon_first + 1 >= lon_cells_) {
                lon_first = 0;
                lon_last = lon_cells_ - 1;
            }
        }
    }
    const auto lat_first = static_cast<std::int64_t>(std::floor(lat_lo / cell_deg_));
    const auto lat_last = static_cast<std::int64_t>(std::floor(lat_hi / cell_deg_));

    std::vector<std::size_t> out;
    for (std::int64_t la = lat_first; la <= lat_last; ++la) {
        for (std::int64_t lo = lon_first; lo <= lon_last; ++lo) {
            const auto it = cells_.find(key(la, lo));
            if (it == cells_.end()) continue;
            for (std::size_t i : it->second) {
                if (haversine_miles(lat, lon, venues_[i].lat, venues_[i].lon) <= r_miles) out.push_back(i);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> neighborhood(const VenueProfile& v, const SpatialIndex& index, double r_miles) {
    auto found = index.within(v.lat, v.lon, r_miles);
    std::erase_if(found, [&](std::size_t i) { return index.at(i).venue_id == v.venue_id; });
    return found;
}

VenueFeatures extract_venue_features(std::span<const double> before, const VenueSeries& series,
                                     const VenueProfile& profile, std::int64_t start_day) {
    VenueFeatures f;
    f.m_b = mean(before);
    auto read = [&](Counter c, const char* name) {
        const auto v = series.cumulative_before(c, start_day);
        if (!v)
            throw Error(ErrorKind::MissingCounter, std::string(name) + " not observed before " +
                                                       format_iso_date(start_day) + " for " + profile.venue_id);
        return *v;
    };
    f.c_a = read(Counter::Checkins, "checkins");
    const double users = read(Counter::Users, "users");
    f.likes = read(Counter::Likes, "likes");
    f.tips = read(Counter::Tips, "tips");
    if (users > 0.0) {
        f.loyalty = f.c_a / users;
    } else {
        f.loyalty = 1.0;
        f.loyalty_missing = true;
    }
    f.category_onehot[static_cast<std::size_t>(profile.category)] = 1.0;
    return f;
}

PromoFeatures extract_promo_features(const PromotionPeriod& period) {
    if (period.offers.empty()) throw Error(ErrorKind::InvalidConfig, "promotion period without offers");
    PromoFeatures f;
    f.duration = static_cast<double>(period.duration());
    for (const auto& o : period.offers) f.xi[static_cast<std::size_t>(o.kind)] = 1.0;
    f.n_s = static_cast<double>(period.offers.size()) / f.duration;
    return f;
}

double cumulative_checkins_at(const VenueSeries& s, std::int64_t day) {
    const auto& values = s.checkins.values;
    if (values.empty()) return 0.0;
    const std::int64_t idx =
        std::clamp<std::int64_t>(day - s.checkins.origin_day(), 0, static_cast<std::int64_t>(values.size()) - 1);
    return values[static_cast<std::size_t>(idx)];
}

GeoFeatures extract_geo_features(const VenueProfile& v, std::span<const std::size_t> nbhd,
                                 const SpatialIndex& index, const std::map<std::string, VenueSeries>& series,
                                 std::int64_t start_day) {
    GeoFeatures f;
    if (nbhd.empty()) {
        f.isolated = true;
        return f;
    }
    std::array<std::size_t, kCategories> counts{};
    for (std::size_t i : nbhd) {
        const auto& u = index.at(i);
        ++counts[static_cast<std::size_t>(u.category)];
        if (const auto it = series.find(u.venue_id); it != series.end())
            f.area_pop += cumulative_checkins_at(it->second, start_day);
    }
    const auto rho = static_cast<double>(nbhd.size());
    f.density = rho;
    f.competitiveness = static_cast<double>(counts[static_cast<std::size_t>(v.category)]) / rho;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double share = static_cast<double>(c) / rho;
        f.entropy -= share * std::log(share);
    }
    f.entropy = std::max(0.0, f.entropy);
    return f;
}

std::string feature_sets_name(unsigned sets) {
    std::string out;
    auto add = [&](unsigned bit, const char* name) {
        if (!(sets & bit)) return;
        if (!out.empty()) out += "+";
        out += name;
    };
    add(kPromoSet, "Fp");
    add(kVenueSet, "Fv");
    add(kGeoSet, "Fg");
    return out;
}

unsigned parse_feature_sets(std::string_view text) {
    if (text == "all") return kVenueSet | kPromoSet | kGeoSet;
    unsigned sets = 0;
    std::string token;
    auto flush = [&]() {
        std::string t;
        for (char c : token) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (t.starts_with("f")) t.erase(0, 1);
        if (t == "v") {
            sets |= kVenueSet;
        } else if (t == "p") {
            sets |= kPromoSet;
        } else if (t == "g") {
            sets |= kGeoSet;
        } else if (!t.empty()) {
            sets = 0x80000000u;
        }
        token.clear();
    };
    for (char c : text) {
        if (c == ',' || c == '+' || c == ' ') {
            flush();
        } else {
            token.push_back(c);
        }
    }
    flush();
    return (sets & 0x80000000u) ? 0u : sets;
}

const std::vector<FeatureColumn>& feature_columns() {
    static const std::vector<FeatureColumn> columns = [] {
        std::vector<FeatureColumn> c;
        c.push_back({"m_b", kVenueSet, true});
        c.push_back({"c_a", kVenueSet, true});
        c.push_back({"loyalty", kVenueSet, true});
        c.push_back({"loyalty_missing", kVenueSet, false});
        c.push_back({"likes", kVenueSet, true});
        c.push_back({"tips", kVenueSet, true});
        for (Category cat : kAllCategories) c.push_back({"cat_" + std::string(to_string(cat)), kVenueSet, false});
        c.push_back({"duration", kPromoSet, true});
        for (OfferKind k : kAllOfferKinds) c.push_back({"xi_" + std::string(to_string(k)), kPromoSet, false});
        c.push_back({"n_s", kPromoSet, true});
        c.push_back({"density", kGeoSet, true});
        c.push_back({"area_pop", kGeoSet, true});
        c.push_back({"competitiveness", kGeoSet, true});
        c.push_back({"entropy", kGeoSet, true});
        return c;
    }();
    return columns;
}

std::vector<double> FeatureVector::values() const {
    std::vector<double> v;
    v.reserve(feature_columns().size());
    v.push_back(f_v.m_b);
    v.push_back(f_v.c_a);
    v.push_back(f_v.loyalty);
    v.push_back(f_v.loyalty_missing ? 1.0 : 0.0);
    v.push_back(f_v.likes);
    v.push_back(f_v.tips);
    v.insert(v.end(), f_v.category_onehot.begin(), f_v.category_onehot.end());
    v.push_back(f_p.duration);
    v.insert(v.end(), f_p.xi.begin(), f_p.xi.end());
    v.push_back(f_p.n_s);
    v.push_back(f_g.density);
    v.push_back(f_g.area_pop);
    v.push_back(f_g.competitiveness);
    v.push_back(f_g.entropy);
    return v;
}

std::optional<int> class_label(EffectLabel label) noexcept {
    switch (label) {
        case EffectLabel::SignificantIncrease: return 1;
        case EffectLabel::SignificantDecrease:
        case EffectLabel::PoweredNull: return 0;
        case EffectLabel::Inconclusive: return std::nullopt;
    }
    return std::nullopt;
}

std::string feature_csv_header() {
    std::string h = "venue_id,start,end,horizon";
    for (const auto& c : feature_columns()) h += "," + c.name;
    h += ",observed_d,effect_label,label";
    return h;
}

std::string feature_csv_row(const FeatureVector& fv) {
    std::string row = io::csv_escape(fv.venue_id) + "," + format_iso_date(fv.start_day) + "," +
                      format_iso_date(fv.end_day) + "," + std::string(to_string(fv.horizon));
    for (double x : fv.values()) row += "," + io::format_double(x);
    row += "," + io::format_optional(fv.observed_d);
    row += "," + std::string(to_string(fv.effect_label));
    const auto label = class_label(fv.effect_label);
    row += "," + (label ? std::to_string(*label) : std::string("NA"));
    return row;
}

FeatureTable parse_feature_csv(std::span<const std::string> lines) {
    FeatureTable table;
    if (lines.empty() || io::trim(lines[0]) != feature_csv_header())
        throw Error(ErrorKind::MalformedRecord, "feature CSV header does not match the expected column layout");
    const std::size_t n_features = feature_columns().size();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (io::trim(lines[i]).empty()) continue;
        const auto f = io::split_csv(lines[i]);
        if (f.size() != n_features + 7)
            throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(i + 1) + ": wrong field count");
        const auto horizon = parse_horizon(f[3]);
        const auto label = parse_effect_label(f[4 + n_features + 1]);
        if (!horizon || !label) throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(i + 1) + ": bad enum");
        std::vector<double> row(n_features);
        try {
            for (std::size_t c = 0; c < n_features; ++c) row[c] = std::stod(f[4 + c]);
        } catch (const std::exception&) {
            throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(i + 1) + ": non-numeric feature");
        }
        const std::string& d = f[4 + n_features];
        table.ids.push_back(f[0]);
        table.horizons.push_back(*horizon);
        table.rows.push_back(std::move(row));
        table.observed_d.push_back(d == "NA" ? std::nullopt : std::optional<double>(std::stod(d)));
        table.labels.push_back(*label);
    }
    return table;
}

}  // namespace campaignfx
