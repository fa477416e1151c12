#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace campaignfx {

double mean(std::span<const double> xs);

/// Unbiased (n-1) sample variance; 0 for fewer than two values.
double sample_variance(std::span<const double> xs);

/// Right-continuous empirical CDF: one (x, F(x)) point per distinct value.
std::vector<std::pair<double, double>> ecdf_points(std::span<const double> xs);

/// Standard normal upper tail used for two-sided p-values.
double normal_two_sided_p(double z);

/// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> xs);

}  // namespace campaignfx
