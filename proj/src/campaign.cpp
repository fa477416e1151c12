#include "campaignfx/campaign.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "campaignfx/io.hpp"
#include "campaignfx/stats.hpp"
#include "campaignfx/timeutil.hpp"

namespace campaignfx {

std::string_view to_string(OfferKind kind) noexcept {
    switch (kind) {
        case OfferKind::Newbie: return "Newbie";
        case OfferKind::Flash: return "Flash";
        case OfferKind::Frequency: return "Frequency";
        case OfferKind::Friends: return "Friends";
        case OfferKind::Mayor: return "Mayor";
        case OfferKind::Loyalty: return "Loyalty";
        case OfferKind::Swarm: return "Swarm";
    }
    return "?";
}

std::optional<OfferKind> parse_offer_kind(std::string_view name) noexcept {
    for (OfferKind k : kAllOfferKinds) {
        const std::string_view n = to_string(k);
        if (n.size() == name.size() &&
            std::equal(n.begin(), n.end(), name.begin(),
                       [](char a, char b) { return std::tolower(a) == std::tolower(b); }))
            return k;
    }
    return std::nullopt;
}

std::vector<PromotionPeriod> build_promotion_periods(std::span<const SpecialOffer> offers) {
    std::vector<SpecialOffer> sorted(offers.begin(), offers.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const SpecialOffer& a, const SpecialOffer& b) {
        if (a.start_day != b.start_day) return a.start_day < b.start_day;
        return a.end_day < b.end_day;
    });
    std::vector<PromotionPeriod> periods;
    for (auto& offer : sorted) {
        if (!periods.empty() && offer.start_day - periods.back().end_day - 1 <= kMaxUncoveredGap) {
            auto& p = periods.back();
            p.end_day = std::max(p.end_day, offer.end_day);
            p.offers.push_back(std::move(offer));
            continue;
        }
        PromotionPeriod p;
        p.venue_id = offer.venue_id;
        p.start_day = offer.start_day;
        p.end_day = offer.end_day;
        p.offers.push_back(std::move(offer));
        periods.push_back(std::move(p));
    }
    return periods;
}

std::map<std::string, std::vector<PromotionPeriod>> build_all_periods(std::span<const SpecialOffer> offers) {
    std::map<std::string, std::vector<SpecialOffer>> by_venue;
    for (const auto& o : offers) by_venue[o.venue_id].push_back(o);
    std::map<std::string, std::vector<PromotionPeriod>> out;
    for (const auto& [venue, list] : by_venue) out.emplace(venue, build_promotion_periods(list));
    return out;
}

OfferParseResult parse_offers(std::span<const std::string> lines) {
    using json = nlohmann::json;
    OfferParseResult result;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = io::trim(lines[i]);
        if (line.empty()) continue;
        try {
            const json obj = json::parse(line);
            auto text = [&](const char* key) {
                const auto it = obj.find(key);
                if (it == obj.end() || !it->is_string())
                    throw Error(ErrorKind::MalformedRecord, std::string("missing '") + key + "'");
                return it->get<std::string>();
            };
            SpecialOffer o;
            o.venue_id = text("venue_id");
            o.special_id = text("special_id");
            const auto kind = parse_offer_kind(text("type"));
            if (!kind) throw Error(ErrorKind::MalformedRecord, "unknown special type '" + text("type") + "'");
            o.kind = *kind;
            o.start_day = parse_iso_date(text("start"));
            o.end_day = parse_iso_date(text("end"));
            if (o.end_day < o.start_day) throw Error(ErrorKind::MalformedRecord, "end precedes start");
            result.offers.push_back(std::move(o));
        } catch (const json::exception& e) {
            result.errors.push_back({i + 1, std::string("MalformedRecord: ") + e.what()});
        } catch (const Error& e) {
            result.errors.push_back({i + 1, e.what()});
        }
    }
    return result;
}

EligibilityResult eligible_campaigns(std::span<const PromotionPeriod> periods,
                                     const std::map<std::string, DailySeries>& series_index,
                                     const SegmentRules& rules) {
    EligibilityResult result;
    for (const auto& p : periods) {
        const auto it = series_index.find(p.venue_id);
        const std::string subject = p.venue_id + "@" + format_iso_date(p.start_day);
        if (it == series_index.end()) {
            result.skipped.push_back({ErrorKind::MissingSeries, subject, "no daily series for venue"});
            continue;
        }
        if (p.duration() < rules.min_duration) {
            result.skipped.push_back({ErrorKind::IneligibleCampaign, subject, "ShortCampaign"});
            continue;
        }
        try {
            result.campaigns.push_back({p, segment(it->second, p, rules)});
        } catch (const IneligibleCampaign& e) {
            result.skipped.push_back({ErrorKind::IneligibleCampaign, subject, std::string(to_string(e.reason()))});
        }
    }
    return result;
}

OfferStats offer_stats(std::span<const PromotionPeriod> periods) {
    OfferStats stats;
    std::map<OfferKind, std::vector<double>> durations;
    for (const auto& p : periods) {
        for (const auto& o : p.offers) {
            durations[o.kind].push_back(static_cast<double>(o.duration()));
            ++stats.total_offers;
        }
    }
    for (auto& [kind, d] : durations) {
        KindStats ks;
        ks.count = d.size();
        ks.share = static_cast<double>(d.size()) / static_cast<double>(stats.total_offers);
        ks.duration_ecdf = ecdf_points(d);
        stats.kinds.emplace(kind, std::move(ks));
    }
    return stats;
}

}  // namespace campaignfx
