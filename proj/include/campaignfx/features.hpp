#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "campaignfx/campaign.hpp"
#include "campaignfx/cohort.hpp"
#include "campaignfx/effect.hpp"
#include "campaignfx/series.hpp"

namespace campaignfx {

inline constexpr double kEarthRadiusMiles = 3958.7613;

double haversine_miles(double lat1, double lon1, double lat2, double lon2) noexcept;

/// Fixed-cell lat/lon bucket index for closed-ball radius queries.
class SpatialIndex {
public:
    explicit SpatialIndex(std::vector<VenueProfile> venues, double cell_deg = 0.05);

    /// Indices of venues with haversine distance <= r_miles, ascending.
    std::vector<std::size_t> within(double lat, double lon, double r_miles) const;

    const VenueProfile& at(std::size_t i) const { return venues_.at(i); }
    std::size_t size() const noexcept { return venues_.size(); }
    std::optional<std::size_t> find(const std::string& venue_id) const;

private:
    std::int64_t key(std::int64_t lat_cell, std::int64_t lon_cell) const noexcept;

    std::vector<VenueProfile> venues_;
    double cell_deg_;
    std::int64_t lon_cells_;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

inline constexpr double kDefaultRadiusMiles = 0.5;

/// All other venues within r_miles of v (closed ball); v itself (by id) excluded.
std::vector<std::size_t> neighborhood(const VenueProfile& v, const SpatialIndex& index,
                                      double r_miles = kDefaultRadiusMiles);

struct VenueFeatures {
    double m_b = 0.0;
    double c_a = 0.0;
    double loyalty = 1.0;
    bool loyalty_missing = false;
    double likes = 0.0;
    double tips = 0.0;
    std::array<double, kCategories> category_onehot{};
};

struct PromoFeatures {
    double duration = 0.0;
    std::array<double, kOfferKinds> xi{};
    double n_s = 0.0;
};

struct GeoFeatures {
    double density = 0.0;
    double area_pop = 0.0;
    double competitiveness = 0.0;
    double entropy = 0.0;
    bool isolated = false;
};

/// Loyalty is imputed as 1.0 (with loyalty_missing set) when no unique users
/// are recorded. Throws MissingCounter if a counter grid does not reach t_s.
VenueFeatures extract_venue_features(std::span<const double> before, const VenueSeries& series,
                                     const VenueProfile& profile, std::int64_t start_day);

PromoFeatures extract_promo_features(const PromotionPeriod& period);

/// Neighbour cumulative check-ins are read at the start of day start_day,
/// clamped to each neighbour's observed grid; neighbours without a series add 0.
GeoFeatures extract_geo_features(const VenueProfile& v, std::span<const std::size_t> nbhd,
                                 const SpatialIndex& index, const std::map<std::string, VenueSeries>& series,
                                 std::int64_t start_day);

double cumulative_checkins_at(const VenueSeries& s, std::int64_t day);

enum FeatureSet : unsigned { kVenueSet = 1u, kPromoSet = 2u, kGeoSet = 4u };

std::string feature_sets_name(unsigned sets);
/// Parses "v", "p,g", "Fv+Fp", "all", ...; returns 0 on failure.
unsigned parse_feature_sets(std::string_view text);

struct FeatureColumn {
    std::string name;
    FeatureSet set;
    bool ranked;  // reported in the per-feature AUC table
};

/// Model input columns in export order.
const std::vector<FeatureColumn>& feature_columns();

struct FeatureVector {
    std::string venue_id;
    std::int64_t start_day = 0;
    std::int64_t end_day = 0;
    Horizon horizon = Horizon::ShortTerm;
    VenueFeatures f_v;
    PromoFeatures f_p;
    GeoFeatures f_g;
    std::optional<double> observed_d;
    EffectLabel effect_label = EffectLabel::Inconclusive;

    std::vector<double> values() const;  // aligned with feature_columns()
};

/// 1 for SignificantIncrease, 0 for SignificantDecrease/PoweredNull, empty otherwise.
std::optional<int> class_label(EffectLabel label) noexcept;

std::string feature_csv_header();
std::string feature_csv_row(const FeatureVector& fv);

struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<Horizon> horizons;
    std::vector<std::vector<double>> rows;  // aligned with feature_columns()
    std::vector<std::optional<double>> observed_d;
    std::vector<EffectLabel> labels;
};

/// Reads back a CSV written with feature_csv_header/feature_csv_row.
FeatureTable parse_feature_csv(std::span<const std::string> lines);

}  // namespace campaignfx
