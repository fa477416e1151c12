#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "campaignfx/random.hpp"

namespace campaignfx {

struct BootstrapConfig {
    std::size_t bootstraps = 4999;
    double alpha = 0.05;
    std::size_t block_len = 2;
    double power_min = 0.8;
};

enum class Horizon { ShortTerm, LongTerm };
enum class EffectLabel { SignificantIncrease, SignificantDecrease, PoweredNull, Inconclusive };

std::string_view to_string(Horizon h) noexcept;
std::string_view to_string(EffectLabel label) noexcept;
std::optional<EffectLabel> parse_effect_label(std::string_view text) noexcept;
std::optional<Horizon> parse_horizon(std::string_view text) noexcept;

struct EffectResult {
    double diff = 0.0;                  // mean(other) - mean(before), check-ins/day
    std::optional<double> cohens_d;     // empty when undefined
    double p_value = 1.0;
    double power = 0.0;
    double ci_low = 0.0;                // percentile interval of the uncentered distribution
    double ci_high = 0.0;
    double crit_low = 0.0;              // null critical values at alpha/2, 1-alpha/2
    double crit_high = 0.0;
    bool degenerate = false;            // zero-width null distribution
    std::size_t n_before = 0;
    std::size_t n_other = 0;
    Horizon horizon = Horizon::ShortTerm;
    EffectLabel label = EffectLabel::Inconclusive;
};

/// Standardized mean difference (other - before) over the pooled sample
/// standard deviation. Empty when the pooled deviation is zero but the means
/// differ; 0 when both are zero. Throws InsufficientSample below 2 values.
std::optional<double> cohens_d(std::span<const double> before, std::span<const double> other);

/// Draws means of moving-block resamples without materializing them.
/// Overlapping blocks of length L (n-L+1 candidates), uniformly with
/// replacement, concatenated and truncated to n. Falls back to L = n when n < L.
class MovingBlockSampler {
public:
    MovingBlockSampler(std::span<const double> sample, std::size_t block_len);

    double draw_mean(Rng& rng);
    std::vector<double> draw(Rng& rng);

    std::size_t size() const noexcept { return values_.size(); }
    std::size_t block_len() const noexcept { return block_len_; }

private:
    std::vector<double> values_;
    std::vector<double> block_sums_;
    std::vector<double> partial_sums_;  // first n % L values of each block
    std::size_t block_len_;
    std::size_t full_blocks_;
    std::uniform_int_distribution<std::size_t> pick_;
};

std::vector<double> block_resample(std::span<const double> sample, std::size_t block_len, Rng& rng);

struct NullTestResult {
    double observed_diff = 0.0;
    double p_value = 1.0;
    double crit_low = 0.0;
    double crit_high = 0.0;
};

/// Two-sided test of equal means: both samples centered on their own means,
/// B block-bootstrap differences, p = (1 + #{|d*| >= |d_obs|}) / (B + 1).
NullTestResult bootstrap_test(std::span<const double> before, std::span<const double> other,
                              const BootstrapConfig& cfg, Rng& rng);

struct PowerResult {
    double power = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool degenerate = false;
};

/// Share of uncentered (alternative) bootstrap differences outside the null
/// critical interval. Builds the null interval first from the same stream, so
/// for a given rng state it agrees with bootstrap_test's critical values.
PowerResult bootstrap_power(std::span<const double> before, std::span<const double> other,
                            const BootstrapConfig& cfg, Rng& rng);

EffectLabel classify_effect(double p_value, double power, double diff, double alpha = 0.05,
                            double power_min = 0.8);

/// Runs d, the null test and the power estimate in one pass and labels the result.
EffectResult evaluate_effect(std::span<const double> before, std::span<const double> other,
                             Horizon horizon, const BootstrapConfig& cfg, Rng& rng);

}  // namespace campaignfx
