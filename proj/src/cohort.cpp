#include "campaignfx/cohort.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "campaignfx/io.hpp"
#include "campaignfx/stats.hpp"

namespace campaignfx {

std::string_view to_string(Category c) noexcept {
    switch (c) {
        case Category::Nightlife: return "Nightlife";
        case Category::Food: return "Food";
        case Category::Shops: return "Shops";
        case Category::Arts: return "Arts";
        case Category::College: return "College";
        case Category::Outdoors: return "Outdoors";
        case Category::Travel: return "Travel";
        case Category::Residence: return "Residence";
        case Category::Professional: return "Professional";
    }
    return "?";
}

std::optional<Category> parse_category(std::string_view name) noexcept {
    for (Category c : kAllCategories) {
        const std::string_view n = to_string(c);
        if (n.size() == name.size() &&
            std::equal(n.begin(), n.end(), name.begin(),
                       [](char a, char b) { return std::tolower(a) == std::tolower(b); }))
            return c;
    }
    return std::nullopt;
}

ProfileParseResult parse_profiles(std::span<const std::string> lines) {
    using json = nlohmann::json;
    ProfileParseResult result;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = io::trim(lines[i]);
        if (line.empty()) continue;
        try {
            const json obj = json::parse(line);
            VenueProfile v;
            const auto id = obj.find("venue_id");
            if (id == obj.end() || !id->is_string()) throw Error(ErrorKind::MalformedRecord, "missing 'venue_id'");
            v.venue_id = id->get<std::string>();
            const auto lat = obj.find("lat");
            const auto lon = obj.find("lon");
            if (lat == obj.end() || !lat->is_number() || lon == obj.end() || !lon->is_number())
                throw Error(ErrorKind::MalformedRecord, "missing 'lat'/'lon'");
            v.lat = lat->get<double>();
            v.lon = lon->get<double>();
            if (std::abs(v.lat) > 90.0 || std::abs(v.lon) > 180.0)
                throw Error(ErrorKind::MalformedRecord, "coordinates out of range");
            const auto cat = obj.find("category");
            if (cat == obj.end() || !cat->is_string()) throw Error(ErrorKind::MalformedRecord, "missing 'category'");
            const auto parsed = parse_category(cat->get<std::string>());
            if (!parsed) throw Error(ErrorKind::MalformedRecord, "unknown category '" + cat->get<std::string>() + "'");
            v.category = *parsed;
            result.venues.push_back(std::move(v));
        } catch (const json::exception& e) {
            result.errors.push_back({i + 1, std::string("MalformedRecord: ") + e.what()});
        } catch (const Error& e) {
            result.errors.push_back({i + 1, e.what()});
        }
    }
    return result;
}

GridCell grid_cell(double lat, double lon, double grid_deg) noexcept {
    return {static_cast<std::int64_t>(std::floor(lat / grid_deg)),
            static_cast<std::int64_t>(std::floor(lon / grid_deg))};
}

MatchResult match_reference(std::span<const VenueProfile> promo, std::span<const VenueProfile> pool,
                            const MatchConfig& cfg, Rng& rng) {
    if (cfg.n_groups < 1 || !(cfg.grid_deg > 0.0))
        throw Error(ErrorKind::InvalidConfig, "n_groups must be >= 1 and grid_deg > 0");
    using Key = std::pair<Category, GridCell>;
    std::map<Key, std::vector<std::size_t>> buckets;
    MatchResult result;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].has_promotion) {
            result.issues.push_back({ErrorKind::InvalidConfig, pool[i].venue_id, "promotion venue in reference pool"});
            continue;
        }
        buckets[{pool[i].category, grid_cell(pool[i].lat, pool[i].lon, cfg.grid_deg)}].push_back(i);
    }

    auto take = [&](std::vector<std::size_t>& bucket, std::size_t pos) {
        const std::size_t chosen = bucket[pos];
        bucket[pos] = bucket.back();
        bucket.pop_back();
        return chosen;
    };

    result.groups.resize(static_cast<std::size_t>(cfg.n_groups));
    for (int g = 0; g < cfg.n_groups; ++g) {
        auto& group = result.groups[static_cast<std::size_t>(g)];
        group.group_id = g;
        for (const auto& v : promo) {
            const GridCell home = grid_cell(v.lat, v.lon, cfg.grid_deg);
            std::optional<std::size_t> chosen;
            if (auto it = buckets.find({v.category, home}); it != buckets.end() && !it->second.empty()) {
                chosen = take(it->second, uniform_index(rng, it->second.size()));
            } else {
                std::vector<std::vector<std::size_t>*> around;
                std::size_t total = 0;
                for (std::int64_t dlat = -1; dlat <= 1; ++dlat) {
                    for (std::int64_t dlon = -1; dlon <= 1; ++dlon) {
                        auto nb = buckets.find({v.category, GridCell{home.lat + dlat, home.lon + dlon}});
                        if (nb == buckets.end() || nb->second.empty()) continue;
                        around.push_back(&nb->second);
                        total += nb->second.size();
                    }
                }
                if (total > 0) {
                    std::size_t pick = uniform_index(rng, total);
                    for (auto* bucket : around) {
                        if (pick < bucket->size()) {
                            chosen = take(*bucket, pick);
                            break;
                        }
                        pick -= bucket->size();
                    }
                }
            }
            if (!chosen) {
                result.issues.push_back({ErrorKind::PoolExhausted, v.venue_id, "group " + std::to_string(g)});
                continue;
            }
            group.members.push_back({pool[*chosen].venue_id, v.venue_id, std::nullopt});
        }
    }
    return result;
}

ReferenceGroup assign_pseudo_periods(const ReferenceGroup& group, std::span<const EmpiricalPeriod> empirical,
                                     const std::map<std::string, DailySeries>& series_index, Rng& rng,
                                     IssueLog& issues, const SegmentRules& rules) {
    if (empirical.empty()) throw Error(ErrorKind::InvalidConfig, "empirical period distribution is empty");
    ReferenceGroup out;
    out.group_id = group.group_id;
    for (const auto& member : group.members) {
        const auto it = series_index.find(member.venue_id);
        bool placed = false;
        if (it != series_index.end()) {
            for (int attempt = 0; attempt < kMaxPseudoAttempts && !placed; ++attempt) {
                const auto& draw = empirical[uniform_index(rng, empirical.size())];
                const std::int64_t start = it->second.origin_day + draw.start_offset;
                const std::int64_t end = start + draw.duration - 1;
                try {
                    (void)segment(it->second, start, end, rules);
                } catch (const IneligibleCampaign&) {
                    continue;
                }
                ReferenceMember m = member;
                m.pseudo = PromotionPeriod{member.venue_id, start, end, {}};
                out.members.push_back(std::move(m));
                placed = true;
            }
        }
        if (!placed)
            issues.push_back({ErrorKind::UnfittablePeriod, member.venue_id, "group " + std::to_string(group.group_id)});
    }
    return out;
}

std::vector<ReferenceMember> filter_zero_activity(std::span<const ReferenceMember> members,
                                                  const std::map<std::string, DailySeries>& series_index) {
    std::vector<ReferenceMember> out;
    for (const auto& m : members) {
        const auto it = series_index.find(m.venue_id);
        if (it != series_index.end() &&
            std::all_of(it->second.values.begin(), it->second.values.end(), [](double v) { return v == 0.0; }))
            continue;
        out.push_back(m);
    }
    return out;
}

std::string_view to_string(FractionMode mode) noexcept {
    return mode == FractionMode::RawSign ? "raw_sign" : "significant_only";
}

namespace {

struct Tally {
    std::size_t counted = 0;
    std::size_t increases = 0;
};

Tally tally(std::span<const EffectResult> results, FractionMode mode) {
    Tally t;
    for (const auto& r : results) {
        if (mode == FractionMode::RawSign) {
            ++t.counted;
            if (r.diff > 0.0) ++t.increases;
        } else if (r.label != EffectLabel::Inconclusive) {
            ++t.counted;
            if (r.label == EffectLabel::SignificantIncrease) ++t.increases;
        }
    }
    return t;
}

}  // namespace

FractionEstimate increase_fraction(std::span<const EffectResult> results, FractionMode mode) {
    const Tally t = tally(results, mode);
    if (t.counted == 0) throw Error(ErrorKind::EmptyDenominator, "no results qualify for the fraction");
    FractionEstimate e;
    const auto n = static_cast<double>(t.counted);
    e.fraction = static_cast<double>(t.increases) / n;
    const double half = 1.96 * std::sqrt(e.fraction * (1.0 - e.fraction) / n);
    e.ci_low = std::max(0.0, e.fraction - half);
    e.ci_high = std::min(1.0, e.fraction + half);
    e.n_counted = t.counted;
    e.n_groups = 1;
    return e;
}

FractionEstimate increase_fraction(std::span<const std::vector<EffectResult>> groups, FractionMode mode) {
    std::vector<double> fractions;
    std::size_t counted = 0;
    for (const auto& g : groups) {
        const Tally t = tally(g, mode);
        if (t.counted == 0) continue;
        counted += t.counted;
        fractions.push_back(static_cast<double>(t.increases) / static_cast<double>(t.counted));
    }
    if (fractions.empty()) throw Error(ErrorKind::EmptyDenominator, "no group has a qualifying result");
    FractionEstimate e;
    e.fraction = mean(fractions);
    const double half = 1.96 * std::sqrt(sample_variance(fractions) / static_cast<double>(fractions.size()));
    e.ci_low = e.fraction - half;
    e.ci_high = e.fraction + half;
    e.n_counted = counted;
    e.n_groups = fractions.size();
    return e;
}

EcdfResult effect_ecdf(std::span<const std::optional<double>> ds) {
    EcdfResult out;
    std::vector<double> defined;
    for (const auto& d : ds) {
        if (d) {
            defined.push_back(*d);
        } else {
            ++out.excluded;
        }
    }
    out.points = ecdf_points(defined);
    return out;
}

}  // namespace campaignfx
