#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "campaignfx/effect.hpp"
#include "campaignfx/error.hpp"
#include "campaignfx/random.hpp"
#include "campaignfx/stats.hpp"

using namespace campaignfx;

namespace {

std::vector<double> poisson_sample(Rng& rng, double lambda, std::size_t n) {
    std::poisson_distribution<int> pois(lambda);
    std::vector<double> xs(n);
    for (auto& x : xs) x = pois(rng);
    return xs;
}

}  // namespace

TEST_CASE("basic statistics") {
    const std::vector<double> xs = {1, 2, 3, 4};
    CHECK(mean(xs) == 2.5);
    CHECK(sample_variance(xs) == doctest::Approx(5.0 / 3.0));
    const std::vector<double> one = {7};
    CHECK(sample_variance(one) == 0.0);
    const std::vector<double> tied = {10, 20, 20, 30};
    CHECK(average_ranks(tied) == std::vector<double>{1, 2.5, 2.5, 4});
    CHECK(normal_two_sided_p(0.0) == doctest::Approx(1.0));
    CHECK(normal_two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("cohens_d examples") {
    const std::vector<double> b = {1, 2, 3}, o = {2, 3, 4};
    REQUIRE(cohens_d(b, o).has_value());
    CHECK(*cohens_d(b, o) == doctest::Approx(1.0));
    CHECK(*cohens_d(b, b) == 0.0);
    const std::vector<double> twos = {2, 2}, threes = {3, 3};
    CHECK_FALSE(cohens_d(twos, threes).has_value());
    CHECK(*cohens_d(twos, twos) == 0.0);
    const std::vector<double> one = {1};
    CHECK_THROWS_AS(cohens_d(one, b), Error);
}

TEST_CASE("cohens_d pools unequal sample sizes") {
    // before var 1 (n=3), other [0,4] var 8 (n=2): pooled = sqrt((2*1 + 1*8)/3)
    const std::vector<double> b = {1, 2, 3}, o = {0, 4};
    CHECK(*cohens_d(b, o) == doctest::Approx(0.0));
    const std::vector<double> o2 = {4, 8};
    CHECK(*cohens_d(b, o2) == doctest::Approx((6.0 - 2.0) / std::sqrt(10.0 / 3.0)));
}

TEST_CASE("block_resample structure") {
    Rng rng(5);
    const std::vector<double> single = {7};
    CHECK(block_resample(single, 3, rng) == std::vector<double>{7});
    const std::vector<double> flat = {3, 3, 3, 3};
    CHECK(block_resample(flat, 2, rng) == flat);

    const std::vector<double> src = {10, 20, 30, 40, 50};
    for (int t = 0; t < 200; ++t) {
        const auto out = block_resample(src, 2, rng);
        REQUIRE(out.size() == 5);
        // blocks start at 0, 2, 4; each block is two consecutive source values
        for (std::size_t i = 0; i + 1 < out.size(); i += 2) CHECK(out[i + 1] == out[i] + 10);
        CHECK(out[4] <= 40);  // last element is the head of a block, never the source tail
    }

    const std::vector<double> short_src = {1, 2};
    for (int t = 0; t < 20; ++t) CHECK(block_resample(short_src, 5, rng) == short_src);
}

TEST_CASE("MovingBlockSampler mean agrees with the materialized draw") {
    Rng a(9), b(9);
    const std::vector<double> src = {1, 5, 2, 8, 3, 9, 4};
    MovingBlockSampler s1(src, 3), s2(src, 3);
    for (int t = 0; t < 100; ++t) {
        const double m = s1.draw_mean(a);
        const auto v = s2.draw(b);
        CHECK(m == doctest::Approx(mean(v)).epsilon(1e-12));
    }
}

TEST_CASE("bootstrap_test examples") {
    BootstrapConfig cfg;
    Rng rng(17);
    const std::vector<double> xs = {1, 3, 2, 5, 4, 0, 2, 2};
    CHECK(bootstrap_test(xs, xs, cfg, rng).p_value == 1.0);

    std::vector<double> zeros(28, 0.0), hundreds(28);
    std::normal_distribution<double> nd(100.0, 1.0);
    for (auto& h : hundreds) h = nd(rng);
    const auto r = bootstrap_test(zeros, hundreds, cfg, rng);
    CHECK(r.p_value == doctest::Approx(1.0 / 5000.0));
    CHECK(r.observed_diff > 95.0);

    const std::vector<double> one = {1};
    CHECK_THROWS_AS(bootstrap_test(one, xs, cfg, rng), Error);
}

TEST_CASE("p-value floor and range") {
    BootstrapConfig cfg;
    cfg.bootstraps = 199;
    Rng rng(23);
    for (int t = 0; t < 50; ++t) {
        const auto b = poisson_sample(rng, 3, 28), o = poisson_sample(rng, 3 + t * 0.2, 28);
        const auto r = evaluate_effect(b, o, Horizon::ShortTerm, cfg, rng);
        CHECK(r.p_value >= 1.0 / 200.0);
        CHECK(r.p_value <= 1.0);
        CHECK(r.ci_low <= r.ci_high);
        CHECK(r.crit_low <= r.crit_high);
        CHECK(r.power >= 0.0);
        CHECK(r.power <= 1.0);
        CHECK(r.label == classify_effect(r.p_value, r.power, r.diff, cfg.alpha, cfg.power_min));
    }
}

TEST_CASE("bootstrap_power examples") {
    BootstrapConfig cfg;
    cfg.bootstraps = 999;
    Rng rng(31);
    const auto b = poisson_sample(rng, 3, 28);
    const double sd = std::sqrt(sample_variance(b));
    std::vector<double> o = b;
    for (auto& x : o) x += 100 * sd;
    CHECK(bootstrap_power(b, o, cfg, rng).power >= 0.99);

    double sum = 0.0;
    const int reps = 200;
    for (int t = 0; t < reps; ++t) {
        Rng r = make_rng(31, "same", t);
        const auto s = poisson_sample(r, 3, 28);
        sum += bootstrap_power(s, s, cfg, r).power;
    }
    CHECK(std::abs(sum / reps - cfg.alpha) <= 0.03);

    const std::vector<double> zeros(28, 0.0);
    const auto z = bootstrap_power(zeros, zeros, cfg, rng);
    CHECK(z.power == 0.0);
    CHECK(z.degenerate);
}

TEST_CASE("classify_effect rules") {
    CHECK(classify_effect(0.01, 0.9, 2.0) == EffectLabel::SignificantIncrease);
    CHECK(classify_effect(0.01, 0.1, -2.0) == EffectLabel::SignificantDecrease);
    CHECK(classify_effect(0.2, 0.85, 1.0) == EffectLabel::PoweredNull);
    CHECK(classify_effect(0.2, 0.3, -1.0) == EffectLabel::Inconclusive);
    CHECK(classify_effect(0.05, 0.8, 1.0) == EffectLabel::PoweredNull);
    for (auto l : {EffectLabel::SignificantIncrease, EffectLabel::SignificantDecrease, EffectLabel::PoweredNull,
                   EffectLabel::Inconclusive})
        CHECK(parse_effect_label(to_string(l)) == l);
}

TEST_CASE("swapping samples flips the diff and keeps p") {
    BootstrapConfig cfg;
    cfg.bootstraps = 999;
    Rng g(51);
    const auto b = poisson_sample(g, 3, 28), o = poisson_sample(g, 4, 28);
    Rng r1(5), r2(5);
    const auto ab = bootstrap_test(b, o, cfg, r1);
    const auto ba = bootstrap_test(o, b, cfg, r2);
    CHECK(ab.observed_diff == doctest::Approx(-ba.observed_diff));
    CHECK(std::abs(ab.p_value - ba.p_value) < 0.03);
}

TEST_CASE("location shift leaves every statistic unchanged") {
    BootstrapConfig cfg;
    cfg.bootstraps = 999;
    Rng g(61);
    const auto b = poisson_sample(g, 3, 28), o = poisson_sample(g, 4, 35);
    auto b2 = b, o2 = o;
    for (auto& x : b2) x += 1000.0;
    for (auto& x : o2) x += 1000.0;
    Rng r1(8), r2(8);
    const auto e1 = evaluate_effect(b, o, Horizon::ShortTerm, cfg, r1);
    const auto e2 = evaluate_effect(b2, o2, Horizon::ShortTerm, cfg, r2);
    CHECK(e1.p_value == e2.p_value);
    CHECK(e1.power == e2.power);
    CHECK(e1.label == e2.label);
    CHECK(*e1.cohens_d == doctest::Approx(*e2.cohens_d).epsilon(1e-9));
}

TEST_CASE("block_len 1 type-I error on iid nulls") {
    BootstrapConfig cfg;
    cfg.block_len = 1;
    cfg.bootstraps = 999;
    int rejections = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        Rng rng = make_rng(2024, "iid-null", t);
        const auto b = poisson_sample(rng, 3, 28), o = poisson_sample(rng, 3, 28);
        if (bootstrap_test(b, o, cfg, rng).p_value < cfg.alpha) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / trials;
    MESSAGE("type-I error with block_len 1: " << rate);
    CHECK(rate >= cfg.alpha - 0.02);
    CHECK(rate <= cfg.alpha + 0.02);
}

TEST_CASE("power is monotone over a planted effect grid") {
    BootstrapConfig cfg;
    cfg.bootstraps = 499;
    const std::vector<double> grid = {0.0, 0.2, 0.5, 0.8, 1.2};
    std::vector<double> mean_power;
    for (double d : grid) {
        double sum = 0.0;
        const int reps = 100;
        for (int t = 0; t < reps; ++t) {
            Rng rng = make_rng(99, "grid", t);
            // lambda 3, so sd ~ sqrt(3); shift the other mean by d standard deviations
            const auto b = poisson_sample(rng, 3, 28);
            const auto o = poisson_sample(rng, 3 + d * std::sqrt(3.0), 28);
            sum += bootstrap_power(b, o, cfg, rng).power;
        }
        mean_power.push_back(sum / reps);
    }
    for (std::size_t i = 1; i < mean_power.size(); ++i) CHECK(mean_power[i] >= mean_power[i - 1] - 0.03);
    CHECK(mean_power.back() > 0.9);
}

TEST_CASE("results depend only on the stream seed") {
    BootstrapConfig cfg;
    cfg.bootstraps = 299;
    Rng g(3);
    const auto b = poisson_sample(g, 3, 28), o = poisson_sample(g, 5, 28);
    Rng r1 = make_rng(1, "promotion", "v1", 100), r2 = make_rng(1, "promotion", "v1", 100);
    const auto e1 = evaluate_effect(b, o, Horizon::LongTerm, cfg, r1);
    const auto e2 = evaluate_effect(b, o, Horizon::LongTerm, cfg, r2);
    CHECK(e1.p_value == e2.p_value);
    CHECK(e1.power == e2.power);
    CHECK(e1.ci_low == e2.ci_low);
    CHECK(e1.horizon == Horizon::LongTerm);
    CHECK(derive_seed(1, "a", 2) != derive_seed(1, "a", 3));
}
