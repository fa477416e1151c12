#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "campaignfx/campaign.hpp"
#include "campaignfx/cohort.hpp"
#include "campaignfx/series.hpp"
#include "campaignfx/timeutil.hpp"

namespace campaignfx {

struct SynthConfig {
    int n_venues = 500;
    int days = 120;                      // observed days; days + 1 polls are emitted
    double base_rate_log_mean = 1.0;     // log of daily check-ins
    double base_rate_log_sd = 0.6;
    double weekly_seasonality_amp = 0.2;
    double platform_trend_per_day = 0.0;
    double trend_sd_per_day = 0.0;       // venue-level popularity drift around the platform trend
    double promo_fraction = 0.2;
    double effect_multiplier = 0.0;      // delta; m(t) = 1 + delta inside planted periods
    double zero_venue_fraction = 0.02;
    std::uint64_t seed = 1;

    std::int64_t start_day = days_from_civil(2012, 4, 2);
    double lat_min = 40.60, lat_max = 40.90;
    double lon_min = -74.05, lon_max = -73.75;

    int campaign_min_days = 7;
    int campaign_max_days = 56;
    int history_days = 28;                   // earliest planted start
    std::optional<int> planted_start;        // fixes the start offset for every promoted venue
    std::optional<int> planted_duration;     // fixes the duration (clipped to the data)

    /// Throws InvalidConfig.
    void validate() const;
};

struct TruthRecord {
    std::string venue_id;
    bool promoted = false;
    bool zero = false;
    double base_rate = 0.0;
    double trend = 0.0;
    std::optional<PromotionPeriod> period;  // calendar days
    double delta = 0.0;
    double d_exp = 0.0;
};

struct GroundTruth {
    std::vector<TruthRecord> venues;
};

struct SynthVenue {
    VenueProfile profile;
    std::vector<SnapshotReading> readings;
    std::vector<SpecialOffer> offers;
    TruthRecord truth;
};

/// Fixes which venues are promoted or all-zero, then generates venues one at a
/// time from per-venue RNG streams, so any subset can be produced on demand.
class SynthGenerator {
public:
    explicit SynthGenerator(SynthConfig cfg);

    std::size_t size() const noexcept { return role_.size(); }
    SynthVenue venue(std::size_t i) const;
    const SynthConfig& config() const noexcept { return cfg_; }
    std::string venue_id(std::size_t i) const;

private:
    enum class Role : unsigned char { Plain, Promoted, Zero };
    SynthConfig cfg_;
    std::vector<Role> role_;
};

struct Corpus {
    std::vector<std::string> snapshot_lines;
    std::vector<std::string> offer_lines;
    std::vector<std::string> venue_lines;
    GroundTruth truth;
};

Corpus generate_corpus(const SynthConfig& cfg);

std::string snapshot_json(const SnapshotReading& r);
std::string offer_json(const SpecialOffer& o);
std::string profile_json(const VenueProfile& p);
std::string truth_json(const TruthRecord& t);

/// Weekly multiplier on day index t (days since the epoch).
double seasonality(double amp, std::int64_t day) noexcept;

/// Standardized effect attributable to the promotion: the planted shift in the
/// expected during-mean over the expected pooled standard deviation of
/// independent Poisson days with the given means. Zero iff the two during
/// means coincide.
double expected_d(std::span<const double> mu_before, std::span<const double> mu_during,
                  std::span<const double> mu_during_null);

/// Expected d for a stationary venue (rate lambda, weekly amplitude, segments
/// starting at day 0 and n_before respectively).
double stationary_expected_d(double lambda, double delta, double amp, int n_before, int n_during);

/// Smallest delta whose stationary_expected_d reaches target (bisection).
double delta_for_expected_d(double lambda, double target, double amp, int n_before, int n_during);

struct OracleEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t draws = 0;
};

/// Monte Carlo mean of Cohen's d over simulated Poisson segment pairs.
OracleEstimate oracle_expected_d(double lambda, double delta, double amp, int n_before, int n_during,
                                 std::uint64_t seed = 1, std::size_t draws = 100000);

}  // namespace campaignfx
