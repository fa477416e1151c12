#include "campaignfx/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "campaignfx/error.hpp"
#include "campaignfx/random.hpp"

namespace campaignfx {

namespace {

// Rough shares of the top-level categories on a city-scale platform.
constexpr std::array<double, kCategories> kCategoryWeights = {0.12, 0.30, 0.17, 0.07, 0.05,
                                                              0.07, 0.08, 0.04, 0.10};
// Frequency dominates, the rest share the remainder.
constexpr std::array<double, kOfferKinds> kOfferWeights = {0.05, 0.01, 0.865, 0.02, 0.03, 0.02, 0.005};

constexpr double kLikeRate = 0.03;
constexpr double kTipRate = 0.01;
constexpr int kMaxHistoryDays = 365;
constexpr std::int64_t kPollHour = 2 * 3600;
constexpr std::int64_t kPollJitter = 2 * 3600;

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::InvalidConfig, what);
}

std::int64_t binomial(Rng& rng, std::int64_t n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<std::int64_t>(n, p)(rng);
}

std::int64_t poisson(Rng& rng, double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<std::int64_t>(mean)(rng);
}

template <std::size_t N>
std::size_t weighted_pick(Rng& rng, const std::array<double, N>& w) {
    return std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
}

}  // namespace

void SynthConfig::validate() const {
    require(n_venues >= 1, "n_venues must be positive");
    require(days >= 63, "days must be at least 63");
    require(std::isfinite(base_rate_log_mean), "base_rate_log_mean must be finite");
    require(base_rate_log_sd >= 0.0, "base_rate_log_sd must be non-negative");
    require(weekly_seasonality_amp >= 0.0 && weekly_seasonality_amp < 1.0, "weekly_seasonality_amp must be in [0,1)");
    require(platform_trend_per_day > -1.0 && platform_trend_per_day < 1.0, "platform_trend_per_day out of range");
    require(trend_sd_per_day >= 0.0 && trend_sd_per_day < 0.1, "trend_sd_per_day must be in [0,0.1)");
    require(promo_fraction >= 0.0 && promo_fraction <= 1.0, "promo_fraction must be in [0,1]");
    require(effect_multiplier >= 0.0 && std::isfinite(effect_multiplier), "effect_multiplier must be >= 0");
    require(zero_venue_fraction >= 0.0 && zero_venue_fraction <= 1.0, "zero_venue_fraction must be in [0,1]");
    const auto promoted = std::llround(promo_fraction * n_venues);
    const auto zeros = std::llround(zero_venue_fraction * n_venues);
    require(promoted + zeros <= n_venues, "zero venues must come from non-promoted venues");
    require(lat_min < lat_max && lat_min >= -90.0 && lat_max <= 90.0, "bad latitude box");
    require(lon_min < lon_max && lon_min >= -180.0 && lon_max <= 180.0, "bad longitude box");
    require(campaign_min_days >= 1 && campaign_min_days <= campaign_max_days, "bad campaign length range");
    require(history_days >= 0, "history_days must be non-negative");
    const int start = planted_start.value_or(history_days);
    require(start >= 0 && start + campaign_min_days <= days, "planted campaigns do not fit in the window");
    if (planted_duration) require(*planted_duration >= 1, "planted_duration must be positive");
}

double seasonality(double amp, std::int64_t day) noexcept {
    const auto dow = static_cast<double>(((day % 7) + 7) % 7);
    return 1.0 + amp * std::sin(2.0 * std::numbers::pi * dow / 7.0);
}

SynthGenerator::SynthGenerator(SynthConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto n = static_cast<std::size_t>(cfg_.n_venues);
    role_.assign(n, Role::Plain);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = make_rng(cfg_.seed, "plan");
    std::shuffle(order.begin(), order.end(), rng);
    const auto promoted = static_cast<std::size_t>(std::llround(cfg_.promo_fraction * cfg_.n_venues));
    const auto zeros = static_cast<std::size_t>(std::llround(cfg_.zero_venue_fraction * cfg_.n_venues));
    for (std::size_t i = 0; i < promoted; ++i) role_[order[i]] = Role::Promoted;
    for (std::size_t i = promoted; i < promoted + zeros; ++i) role_[order[i]] = Role::Zero;
}

std::string SynthGenerator::venue_id(std::size_t i) const {
    std::string digits = std::to_string(i);
    const std::size_t width = std::to_string(role_.size() - 1).size();
    return "v" + std::string(width - digits.size(), '0') + digits;
}

SynthVenue SynthGenerator::venue(std::size_t i) const {
    Rng rng = make_rng(cfg_.seed, "venue", static_cast<std::uint64_t>(i));
    const Role role = role_.at(i);
    const int days = cfg_.days;

    SynthVenue out;
    auto& profile = out.profile;
    profile.venue_id = venue_id(i);
    profile.lat = std::uniform_real_distribution<double>(cfg_.lat_min, cfg_.lat_max)(rng);
    profile.lon = std::uniform_real_distribution<double>(cfg_.lon_min, cfg_.lon_max)(rng);
    profile.category = kAllCategories[weighted_pick(rng, kCategoryWeights)];
    profile.has_promotion = role == Role::Promoted;

    const double lambda = std::lognormal_distribution<double>(cfg_.base_rate_log_mean, cfg_.base_rate_log_sd)(rng);
    const double trend = cfg_.platform_trend_per_day + cfg_.trend_sd_per_day * std::normal_distribution<double>()(rng);
    const double first_share = std::uniform_real_distribution<double>(0.3, 0.9)(rng);
    const int history = std::uniform_int_distribution<int>(0, kMaxHistoryDays)(rng);

    auto& truth = out.truth;
    truth.venue_id = profile.venue_id;
    truth.promoted = role == Role::Promoted;
    truth.zero = role == Role::Zero;
    truth.base_rate = role == Role::Zero ? 0.0 : lambda;
    truth.trend = trend;

    int p_start = -1, p_end = -1;
    if (role == Role::Promoted) {
        const int start_lo = cfg_.planted_start.value_or(cfg_.history_days);
        int duration = 0;
        int start = start_lo;
        if (cfg_.planted_duration) {
            duration = std::min(*cfg_.planted_duration, days - start);
        } else {
            const int max_dur = std::min(cfg_.campaign_max_days, days - start_lo);
            duration = std::uniform_int_distribution<int>(cfg_.campaign_min_days, max_dur)(rng);
        }
        if (!cfg_.planted_start) start = std::uniform_int_distribution<int>(start_lo, days - duration)(rng);
        p_start = start;
        p_end = start + duration - 1;

        // 1-3 offers whose uncovered gaps never exceed the merge limit
        const int max_offers = std::min(3, duration);
        const int n_offers = std::uniform_int_distribution<int>(1, max_offers)(rng);
        std::vector<int> cuts{p_start};
        while (static_cast<int>(cuts.size()) < n_offers) {
            const int c = std::uniform_int_distribution<int>(p_start + 1, p_end)(rng);
            if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
        }
        std::sort(cuts.begin(), cuts.end());
        PromotionPeriod period;
        period.venue_id = profile.venue_id;
        period.start_day = cfg_.start_day + p_start;
        period.end_day = cfg_.start_day + p_end;
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            SpecialOffer offer;
            offer.venue_id = profile.venue_id;
            offer.special_id = profile.venue_id + "-s" + std::to_string(k + 1);
            offer.kind = kAllOfferKinds[weighted_pick(rng, kOfferWeights)];
            const int next = k + 1 < cuts.size() ? cuts[k + 1] : p_end + 1;
            const int gap = std::uniform_int_distribution<int>(0, static_cast<int>(std::min<std::int64_t>(kMaxUncoveredGap, next - cuts[k] - 1)))(rng);
            offer.start_day = cfg_.start_day + cuts[k];
            offer.end_day = cfg_.start_day + (k + 1 < cuts.size() ? next - 1 - gap : p_end);
            out.offers.push_back(offer);
        }
        period.offers = out.offers;
        truth.period = period;
        truth.delta = cfg_.effect_multiplier;
    }

    const double rate = role == Role::Zero ? 0.0 : lambda;
    std::vector<double> mu(static_cast<std::size_t>(days));
    std::vector<double> mu_null(static_cast<std::size_t>(days));
    for (int t = 0; t < days; ++t) {
        const double base = rate * seasonality(cfg_.weekly_seasonality_amp, cfg_.start_day + t) *
                            std::pow(1.0 + trend, t);
        mu_null[static_cast<std::size_t>(t)] = base;
        const bool inside = t >= p_start && t <= p_end;
        mu[static_cast<std::size_t>(t)] = inside ? base * (1.0 + cfg_.effect_multiplier) : base;
    }
    if (role == Role::Promoted) {
        const int b0 = std::max(0, p_start - SegmentRules{}.k);
        const auto before = std::span<const double>(mu).subspan(static_cast<std::size_t>(b0),
                                                                  static_cast<std::size_t>(p_start - b0));
        const auto span_len = static_cast<std::size_t>(p_end - p_start + 1);
        const auto during = std::span<const double>(mu).subspan(static_cast<std::size_t>(p_start), span_len);
        const auto during_null = std::span<const double>(mu_null).subspan(static_cast<std::size_t>(p_start), span_len);
        truth.d_exp = before.size() >= 2 ? expected_d(before, during, during_null) : 0.0;
    }

    // Cumulative counters start from a pre-collection history and grow by
    // whole days; each poll adds the share of its own day already elapsed.
    const std::int64_t c0 = poisson(rng, rate * history);
    std::array<std::int64_t, 4> cum{c0, binomial(rng, c0, first_share), binomial(rng, c0, kTipRate),
                                    binomial(rng, c0, kLikeRate)};
    out.readings.reserve(static_cast<std::size_t>(days) + 1);
    for (int t = 0; t <= days; ++t) {
        std::array<std::int64_t, 4> today{0, 0, 0, 0};
        if (t < days) {
            today[0] = poisson(rng, mu[static_cast<std::size_t>(t)]);
            today[1] = binomial(rng, today[0], first_share);
            today[2] = binomial(rng, today[0], kTipRate);
            today[3] = binomial(rng, today[0], kLikeRate);
        }
        const std::int64_t offset =
            kPollHour + std::uniform_int_distribution<std::int64_t>(-kPollJitter, kPollJitter - 1)(rng);
        const double elapsed = static_cast<double>(offset) / static_cast<double>(kSecondsPerDay);
        SnapshotReading r;
        r.venue_id = profile.venue_id;
        const std::int64_t day = cfg_.start_day + t;
        r.ts = day * kSecondsPerDay + offset;
        r.checkins = cum[0] + binomial(rng, today[0], elapsed);
        r.users = cum[1] + binomial(rng, today[1], elapsed);
        r.tips = cum[2] + binomial(rng, today[2], elapsed);
        r.likes = cum[3] + binomial(rng, today[3], elapsed);
        for (const auto& o : out.offers)
            if (day >= o.start_day && day <= o.end_day) ++r.specials;
        out.readings.push_back(r);
        for (std::size_t c = 0; c < 4; ++c) cum[c] += today[c];
    }
    return out;
}

std::string snapshot_json(const SnapshotReading& r) {
    nlohmann::ordered_json j;
    j["venue_id"] = r.venue_id;
    j["ts"] = format_iso8601(r.ts);
    j["checkins"] = r.checkins;
    j["users"] = r.users;
    j["specials"] = r.specials;
    j["tips"] = r.tips;
    j["likes"] = r.likes;
    return j.dump();
}

std::string offer_json(const SpecialOffer& o) {
    nlohmann::ordered_json j;
    j["venue_id"] = o.venue_id;
    j["special_id"] = o.special_id;
    j["type"] = std::string(to_string(o.kind));
    j["start"] = format_iso_date(o.start_day);
    j["end"] = format_iso_date(o.end_day);
    return j.dump();
}

std::string profile_json(const VenueProfile& p) {
    nlohmann::ordered_json j;
    j["venue_id"] = p.venue_id;
    j["lat"] = p.lat;
    j["lon"] = p.lon;
    j["category"] = std::string(to_string(p.category));
    return j.dump();
}

std::string truth_json(const TruthRecord& t) {
    nlohmann::ordered_json j;
    j["venue_id"] = t.venue_id;
    j["promoted"] = t.promoted;
    j["zero"] = t.zero;
    j["base_rate"] = t.base_rate;
    j["trend"] = t.trend;
    if (t.period) {
        j["start"] = format_iso_date(t.period->start_day);
        j["end"] = format_iso_date(t.period->end_day);
    } else {
        j["start"] = nullptr;
        j["end"] = nullptr;
    }
    j["delta"] = t.delta;
    j["d_exp"] = t.d_exp;
    return j.dump();
}

Corpus generate_corpus(const SynthConfig& cfg) {
    const SynthGenerator gen(cfg);
    Corpus corpus;
    corpus.snapshot_lines.reserve(gen.size() * static_cast<std::size_t>(cfg.days + 1));
    for (std::size_t i = 0; i < gen.size(); ++i) {
        SynthVenue v = gen.venue(i);
        for (const auto& r : v.readings) corpus.snapshot_lines.push_back(snapshot_json(r));
        for (const auto& o : v.offers) corpus.offer_lines.push_back(offer_json(o));
        corpus.venue_lines.push_back(profile_json(v.profile));
        corpus.truth.venues.push_back(std::move(v.truth));
    }
    return corpus;
}

double expected_d(std::span<const double> mu_before, std::span<const double> mu_during,
                  std::span<const double> mu_during_null) {
    // E[S^2] for independent Poisson days: spread of the means plus their average.
    auto moments = [](std::span<const double> mu) {
        double m = 0.0;
        for (double x : mu) m += x;
        m /= static_cast<double>(mu.size());
        double ss = 0.0;
        for (double x : mu) ss += (x - m) * (x - m);
        return std::pair{m, ss + (static_cast<double>(mu.size()) - 1.0) * m};
    };
    const auto [mb, ssb] = moments(mu_before);
    const auto [md, ssd] = moments(mu_during);
    double md0 = 0.0;
    for (double x : mu_during_null) md0 += x;
    md0 /= static_cast<double>(mu_during_null.size());
    (void)mb;
    const double df = static_cast<double>(mu_before.size() + mu_during.size()) - 2.0;
    const double pooled = (ssb + ssd) / df;
    if (md == md0) return 0.0;
    if (pooled <= 0.0) return md > md0 ? HUGE_VAL : -HUGE_VAL;
    return (md - md0) / std::sqrt(pooled);
}

double stationary_expected_d(double lambda, double delta, double amp, int n_before, int n_during) {
    std::vector<double> before(static_cast<std::size_t>(n_before));
    std::vector<double> during(static_cast<std::size_t>(n_during));
    std::vector<double> during_null(static_cast<std::size_t>(n_during));
    for (int t = 0; t < n_before; ++t) before[static_cast<std::size_t>(t)] = lambda * seasonality(amp, t);
    for (int t = 0; t < n_during; ++t) {
        const double base = lambda * seasonality(amp, n_before + t);
        during_null[static_cast<std::size_t>(t)] = base;
        during[static_cast<std::size_t>(t)] = base * (1.0 + delta);
    }
    return expected_d(before, during, during_null);
}

double delta_for_expected_d(double lambda, double target, double amp, int n_before, int n_during) {
    if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidConfig, "lambda must be positive");
    if (target <= 0.0) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    while (stationary_expected_d(lambda, hi, amp, n_before, n_during) < target) {
        hi *= 2.0;
        if (hi > 1e6) throw Error(ErrorKind::InvalidConfig, "target effect size not reachable");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (stationary_expected_d(lambda, mid, amp, n_before, n_during) < target ? lo : hi) = mid;
    }
    return hi;
}

OracleEstimate oracle_expected_d(double lambda, double delta, double amp, int n_before, int n_during,
                                 std::uint64_t seed, std::size_t draws) {
    if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidConfig, "lambda must be positive");
    if (delta < 0.0 || n_before < 2 || n_during < 2 || draws < 2)
        throw Error(ErrorKind::InvalidConfig, "oracle needs delta >= 0, two days per segment and two draws");
    Rng rng = make_rng(seed, "oracle");
    std::vector<std::poisson_distribution<int>> before_dist, during_dist;
    for (int t = 0; t < n_before; ++t) before_dist.emplace_back(lambda * seasonality(amp, t));
    for (int t = 0; t < n_during; ++t)
        during_dist.emplace_back(lambda * (1.0 + delta) * seasonality(amp, n_before + t));
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < draws; ++k) {
        double s1 = 0.0, q1 = 0.0, s2 = 0.0, q2 = 0.0;
        for (auto& d : before_dist) {
            const double x = d(rng);
            s1 += x;
            q1 += x * x;
        }
        for (auto& d : during_dist) {
            const double x = d(rng);
            s2 += x;
            q2 += x * x;
        }
        const double nb = n_before, nd = n_during;
        const double m1 = s1 / nb, m2 = s2 / nd;
        const double pooled = ((q1 - nb * m1 * m1) + (q2 - nd * m2 * m2)) / (nb + nd - 2.0);
        double d = 0.0;
        if (pooled > 0.0) {
            d = (m2 - m1) / std::sqrt(pooled);
        } else if (m1 != m2) {
            continue;  // undefined
        }
        sum += d;
        sum_sq += d * d;
        ++used;
    }
    OracleEstimate est;
    est.draws = used;
    const double n = static_cast<double>(used);
    est.mean = sum / n;
    est.se = std::sqrt(std::max(0.0, sum_sq / n - est.mean * est.mean) / (n - 1.0));
    return est;
}

}  // namespace campaignfx
