#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "campaignfx/campaign.hpp"
#include "campaignfx/effect.hpp"
#include "campaignfx/error.hpp"
#include "campaignfx/random.hpp"
#include "campaignfx/series.hpp"

namespace campaignfx {

enum class Category { Nightlife, Food, Shops, Arts, College, Outdoors, Travel, Residence, Professional };

inline constexpr std::size_t kCategories = 9;
inline constexpr std::array<Category, kCategories> kAllCategories = {
    Category::Nightlife, Category::Food,   Category::Shops,     Category::Arts,        Category::College,
    Category::Outdoors,  Category::Travel, Category::Residence, Category::Professional};

std::string_view to_string(Category c) noexcept;
std::optional<Category> parse_category(std::string_view name) noexcept;

struct VenueProfile {
    std::string venue_id;
    Category category = Category::Food;
    double lat = 0.0;
    double lon = 0.0;
    bool has_promotion = false;
};

struct ProfileParseResult {
    std::vector<VenueProfile> venues;
    std::vector<LineIssue> errors;
};

/// JSONL: {"venue_id","lat","lon","category"}; has_promotion is filled in later.
ProfileParseResult parse_profiles(std::span<const std::string> lines);

struct ReferenceMember {
    std::string venue_id;
    std::string counterpart;  // promotion venue it was matched to
    std::optional<PromotionPeriod> pseudo;
};

struct ReferenceGroup {
    int group_id = 0;
    std::vector<ReferenceMember> members;
};

struct MatchConfig {
    int n_groups = 20;
    double grid_deg = 0.1;
};

struct MatchResult {
    std::vector<ReferenceGroup> groups;
    IssueLog issues;  // PoolExhausted per unfilled slot
};

/// Samples, for every group and promotion venue, one pool venue of the same
/// category in the same grid cell (3x3 neighbourhood as fallback), without
/// replacement across all groups.
MatchResult match_reference(std::span<const VenueProfile> promo, std::span<const VenueProfile> pool,
                            const MatchConfig& cfg, Rng& rng);

struct EmpiricalPeriod {
    std::int64_t start_offset = 0;  // days after the venue's series origin
    std::int64_t duration = 0;
};

inline constexpr int kMaxPseudoAttempts = 100;

/// Draws a (start, duration) for every member until it segments cleanly on
/// the member's series; members that never fit are dropped and recorded.
ReferenceGroup assign_pseudo_periods(const ReferenceGroup& group, std::span<const EmpiricalPeriod> empirical,
                                     const std::map<std::string, DailySeries>& series_index, Rng& rng,
                                     IssueLog& issues, const SegmentRules& rules = {});

/// Drops members whose whole daily series is zero.
std::vector<ReferenceMember> filter_zero_activity(std::span<const ReferenceMember> members,
                                                  const std::map<std::string, DailySeries>& series_index);

enum class FractionMode { RawSign, SignificantOnly };

std::string_view to_string(FractionMode mode) noexcept;

struct FractionEstimate {
    double fraction = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_counted = 0;  // results entering the denominator
    std::size_t n_groups = 1;   // groups contributing a fraction
};

/// Single-sample version: binomial normal-approximation CI.
FractionEstimate increase_fraction(std::span<const EffectResult> results, FractionMode mode);

/// Grouped version: mean of per-group fractions, CI mean +- 1.96 sd/sqrt(groups).
/// Groups with an empty denominator are skipped.
FractionEstimate increase_fraction(std::span<const std::vector<EffectResult>> groups, FractionMode mode);

struct EcdfResult {
    std::vector<std::pair<double, double>> points;
    std::size_t excluded = 0;  // undefined d values
};

EcdfResult effect_ecdf(std::span<const std::optional<double>> ds);

/// Cell key on a lat/lon grid of the given spacing.
struct GridCell {
    std::int64_t lat = 0;
    std::int64_t lon = 0;
    auto operator<=>(const GridCell&) const = default;
};

GridCell grid_cell(double lat, double lon, double grid_deg) noexcept;

}  // namespace campaignfx
