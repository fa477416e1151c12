#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "campaignfx/error.hpp"
#include "campaignfx/series.hpp"

namespace campaignfx {

enum class OfferKind { Newbie, Flash, Frequency, Friends, Mayor, Loyalty, Swarm };

inline constexpr std::size_t kOfferKinds = 7;
inline constexpr std::array<OfferKind, kOfferKinds> kAllOfferKinds = {
    OfferKind::Newbie, OfferKind::Flash,   OfferKind::Frequency, OfferKind::Friends,
    OfferKind::Mayor,  OfferKind::Loyalty, OfferKind::Swarm};

std::string_view to_string(OfferKind kind) noexcept;
std::optional<OfferKind> parse_offer_kind(std::string_view name) noexcept;

struct SpecialOffer {
    std::string venue_id;
    std::string special_id;
    OfferKind kind = OfferKind::Frequency;
    std::int64_t start_day = 0;
    std::int64_t end_day = 0;  // inclusive

    std::int64_t duration() const noexcept { return end_day - start_day + 1; }
};

/// A maximal run of offers with no more than two consecutive uncovered days.
struct PromotionPeriod {
    std::string venue_id;
    std::int64_t start_day = 0;
    std::int64_t end_day = 0;  // inclusive
    std::vector<SpecialOffer> offers;

    std::int64_t duration() const noexcept { return end_day - start_day + 1; }
};

inline constexpr std::int64_t kMaxUncoveredGap = 2;

/// Merges one venue's offers into promotion periods, sorted by start day.
std::vector<PromotionPeriod> build_promotion_periods(std::span<const SpecialOffer> offers);

/// Groups offers by venue and merges each group.
std::map<std::string, std::vector<PromotionPeriod>> build_all_periods(std::span<const SpecialOffer> offers);

struct OfferParseResult {
    std::vector<SpecialOffer> offers;
    std::vector<LineIssue> errors;
};

/// JSONL: {"venue_id","special_id","type","start","end"} with ISO-8601 dates.
OfferParseResult parse_offers(std::span<const std::string> lines);

struct EligibleCampaign {
    PromotionPeriod period;
    SegmentedSeries segments;

    bool long_term() const noexcept { return segments.long_term(); }
};

struct EligibilityResult {
    std::vector<EligibleCampaign> campaigns;
    IssueLog skipped;  // MissingSeries or IneligibleCampaign per period
};

/// Keeps periods that last at least `min_duration` days and have `k` days of
/// history, attaching their segmentation.
EligibilityResult eligible_campaigns(std::span<const PromotionPeriod> periods,
                                     const std::map<std::string, DailySeries>& series_index,
                                     const SegmentRules& rules = {});

struct KindStats {
    std::size_t count = 0;
    double share = 0.0;
    std::vector<std::pair<double, double>> duration_ecdf;  // (days, F)
};

struct OfferStats {
    std::size_t total_offers = 0;
    std::map<OfferKind, KindStats> kinds;  // only kinds that occur
};

OfferStats offer_stats(std::span<const PromotionPeriod> periods);

}  // namespace campaignfx
