#include "campaignfx/effect.hpp"

#include <algorithm>
#include <cmath>

#include "campaignfx/error.hpp"
#include "campaignfx/stats.hpp"

namespace campaignfx {
namespace {

void require_samples(std::span<const double> before, std::span<const double> other) {
    if (before.size() < 2 || other.size() < 2)
        throw Error(ErrorKind::InsufficientSample, "both samples need at least 2 values");
}

// Both samples shifted by before[0]. Everything downstream is computed from
// these, so integer data moved by an integer constant gives bit-identical results.
struct Pivoted {
    std::vector<double> before;
    std::vector<double> other;
    double observed = 0.0;
    double tolerance = 0.0;
};

Pivoted pivot(std::span<const double> before, std::span<const double> other) {
    Pivoted p;
    const double anchor = before.front();
    p.before.reserve(before.size());
    p.other.reserve(other.size());
    double scale = 0.0;
    for (double x : before) {
        p.before.push_back(x - anchor);
        scale = std::max(scale, std::abs(p.before.back()));
    }
    for (double x : other) {
        p.other.push_back(x - anchor);
        scale = std::max(scale, std::abs(p.other.back()));
    }
    p.observed = mean(p.other) - mean(p.before);
    p.tolerance = 1e-10 * scale;
    return p;
}

std::vector<double> centered(std::span<const double> xs) {
    const double m = mean(xs);
    std::vector<double> out(xs.begin(), xs.end());
    for (double& x : out) x -= m;
    return out;
}

std::vector<double> bootstrap_diffs(std::span<const double> before, std::span<const double> other,
                                    const BootstrapConfig& cfg, Rng& rng) {
    MovingBlockSampler sb(before, cfg.block_len);
    MovingBlockSampler so(other, cfg.block_len);
    std::vector<double> diffs(cfg.bootstraps);
    for (auto& d : diffs) {
        const double mb = sb.draw_mean(rng);
        const double mo = so.draw_mean(rng);
        d = mo - mb;
    }
    return diffs;
}

// Order statistics at (B+1)*alpha/2 and B+1-(B+1)*alpha/2 (1-based).
std::pair<double, double> percentile_interval(std::vector<double> values, double alpha) {
    const std::size_t b = values.size();
    auto k = static_cast<std::size_t>(std::floor(static_cast<double>(b + 1) * alpha / 2.0));
    k = std::clamp<std::size_t>(k, 1, b);
    const std::size_t lo = k - 1;
    const std::size_t hi = b - k;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double low = values[lo];
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(hi), values.end());
    return {low, values[hi]};
}

struct NullPhase {
    NullTestResult test;
    double tolerance = 0.0;
};

NullPhase run_null(const Pivoted& p, const BootstrapConfig& cfg, Rng& rng) {
    if (cfg.bootstraps == 0) throw Error(ErrorKind::InvalidConfig, "bootstraps must be positive");
    const auto cb = centered(p.before);
    const auto co = centered(p.other);
    const auto diffs = bootstrap_diffs(cb, co, cfg, rng);
    const double threshold = std::abs(p.observed) - p.tolerance;
    std::size_t extreme = 0;
    for (double d : diffs)
        if (std::abs(d) >= threshold) ++extreme;
    NullPhase out;
    out.test.observed_diff = p.observed;
    out.test.p_value = static_cast<double>(1 + extreme) / static_cast<double>(cfg.bootstraps + 1);
    std::tie(out.test.crit_low, out.test.crit_high) = percentile_interval(diffs, cfg.alpha);
    out.tolerance = p.tolerance;
    return out;
}

PowerResult run_alternative(const Pivoted& p, const NullTestResult& null, const BootstrapConfig& cfg,
                            Rng& rng) {
    const auto diffs = bootstrap_diffs(p.before, p.other, cfg, rng);
    std::size_t outside = 0;
    for (double d : diffs)
        if (d < null.crit_low || d > null.crit_high) ++outside;
    PowerResult out;
    out.power = static_cast<double>(outside) / static_cast<double>(diffs.size());
    std::tie(out.ci_low, out.ci_high) = percentile_interval(diffs, cfg.alpha);
    out.degenerate = null.crit_low == null.crit_high;
    return out;
}

}  // namespace

std::string_view to_string(Horizon h) noexcept { return h == Horizon::ShortTerm ? "short" : "long"; }

std::string_view to_string(EffectLabel label) noexcept {
    switch (label) {
        case EffectLabel::SignificantIncrease: return "SignificantIncrease";
        case EffectLabel::SignificantDecrease: return "SignificantDecrease";
        case EffectLabel::PoweredNull: return "PoweredNull";
        case EffectLabel::Inconclusive: return "Inconclusive";
    }
    return "?";
}

std::optional<EffectLabel> parse_effect_label(std::string_view text) noexcept {
    for (auto l : {EffectLabel::SignificantIncrease, EffectLabel::SignificantDecrease, EffectLabel::PoweredNull,
                   EffectLabel::Inconclusive})
        if (to_string(l) == text) return l;
    return std::nullopt;
}

std::optional<Horizon> parse_horizon(std::string_view text) noexcept {
    if (text == "short") return Horizon::ShortTerm;
    if (text == "long") return Horizon::LongTerm;
    return std::nullopt;
}

std::optional<double> cohens_d(std::span<const double> before, std::span<const double> other) {
    require_samples(before, other);
    const Pivoted p = pivot(before, other);
    const double n1 = static_cast<double>(p.before.size());
    const double n2 = static_cast<double>(p.other.size());
    const double pooled_var =
        ((n1 - 1.0) * sample_variance(p.before) + (n2 - 1.0) * sample_variance(p.other)) / (n1 + n2 - 2.0);
    const double numerator = mean(p.other) - mean(p.before);
    if (pooled_var <= 0.0) {
        if (numerator == 0.0) return 0.0;
        return std::nullopt;
    }
    return numerator / std::sqrt(pooled_var);
}

MovingBlockSampler::MovingBlockSampler(std::span<const double> sample, std::size_t block_len)
    : values_(sample.begin(), sample.end()) {
    if (values_.empty()) throw Error(ErrorKind::InsufficientSample, "cannot resample an empty sample");
    if (block_len == 0) throw Error(ErrorKind::InvalidConfig, "block_len must be at least 1");
    const std::size_t n = values_.size();
    block_len_ = std::min(block_len, n);
    full_blocks_ = n / block_len_;
    const std::size_t remainder = n % block_len_;
    const std::size_t starts = n - block_len_ + 1;
    block_sums_.resize(starts);
    partial_sums_.assign(remainder > 0 ? starts : 0, 0.0);
    for (std::size_t j = 0; j < starts; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < block_len_; ++t) {
            if (t == remainder && remainder > 0) partial_sums_[j] = s;
            s += values_[j + t];
        }
        block_sums_[j] = s;
    }
    pick_ = std::uniform_int_distribution<std::size_t>(0, starts - 1);
}

double MovingBlockSampler::draw_mean(Rng& rng) {
    double s = 0.0;
    for (std::size_t i = 0; i < full_blocks_; ++i) s += block_sums_[pick_(rng)];
    if (!partial_sums_.empty()) s += partial_sums_[pick_(rng)];
    return s / static_cast<double>(values_.size());
}

std::vector<double> MovingBlockSampler::draw(Rng& rng) {
    std::vector<double> out;
    out.reserve(values_.size());
    for (std::size_t i = 0; i < full_blocks_; ++i) {
        const std::size_t j = pick_(rng);
        out.insert(out.end(), values_.begin() + static_cast<std::ptrdiff_t>(j),
                   values_.begin() + static_cast<std::ptrdiff_t>(j + block_len_));
    }
    if (!partial_sums_.empty()) {
        const std::size_t j = pick_(rng);
        const std::size_t remainder = values_.size() - out.size();
        out.insert(out.end(), values_.begin() + static_cast<std::ptrdiff_t>(j),
                   values_.begin() + static_cast<std::ptrdiff_t>(j + remainder));
    }
    return out;
}

std::vector<double> block_resample(std::span<const double> sample, std::size_t block_len, Rng& rng) {
    MovingBlockSampler sampler(sample, block_len);
    return sampler.draw(rng);
}

NullTestResult bootstrap_test(std::span<const double> before, std::span<const double> other,
                              const BootstrapConfig& cfg, Rng& rng) {
    require_samples(before, other);
    return run_null(pivot(before, other), cfg, rng).test;
}

PowerResult bootstrap_power(std::span<const double> before, std::span<const double> other,
                            const BootstrapConfig& cfg, Rng& rng) {
    require_samples(before, other);
    const Pivoted p = pivot(before, other);
    const NullPhase null = run_null(p, cfg, rng);
    return run_alternative(p, null.test, cfg, rng);
}

EffectLabel classify_effect(double p_value, double power, double diff, double alpha, double power_min) {
    if (p_value < alpha) {
        if (diff > 0.0) return EffectLabel::SignificantIncrease;
        if (diff < 0.0) return EffectLabel::SignificantDecrease;
        return EffectLabel::Inconclusive;
    }
    if (power >= power_min) return EffectLabel::PoweredNull;
    return EffectLabel::Inconclusive;
}

EffectResult evaluate_effect(std::span<const double> before, std::span<const double> other, Horizon horizon,
                             const BootstrapConfig& cfg, Rng& rng) {
    require_samples(before, other);
    const Pivoted p = pivot(before, other);
    const NullPhase null = run_null(p, cfg, rng);
    const PowerResult alt = run_alternative(p, null.test, cfg, rng);
    EffectResult r;
    r.diff = p.observed;
    r.cohens_d = cohens_d(before, other);
    r.p_value = null.test.p_value;
    r.power = alt.power;
    r.ci_low = alt.ci_low;
    r.ci_high = alt.ci_high;
    r.crit_low = null.test.crit_low;
    r.crit_high = null.test.crit_high;
    r.degenerate = alt.degenerate;
    r.n_before = before.size();
    r.n_other = other.size();
    r.horizon = horizon;
    r.label = classify_effect(r.p_value, r.power, r.diff, cfg.alpha, cfg.power_min);
    return r;
}

}  // namespace campaignfx
