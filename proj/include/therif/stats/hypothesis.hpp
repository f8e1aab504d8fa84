#pragma once

#include <span>
#include <vector>

namespace therif::stats {

struct StatResult {
  double statistic = 0.0;
  double df = 0.0;
  double df2 = 0.0;  // second df for F tests, 0 otherwise
  double p_value = 1.0;
  double effect_size = 0.0;  // Cohen's d, eta squared or Cramer's V
};

double mean(std::span<const double> xs);
// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> xs);

// Welch's unequal-variance t test with Welch-Satterthwaite df.
StatResult welch_t(std::span<const double> a, std::span<const double> b);

// Pooled-variance (unpaired) or difference-based (paired) t test.
StatResult student_t(std::span<const double> a, std::span<const double> b, bool paired);

// (mean a - mean b) / pooled SD, or mean(diff) / SD(diff) when paired.
double cohens_d(std::span<const double> a, std::span<const double> b, bool paired);

// Effect size is eta squared.
StatResult one_way_anova(const std::vector<std::vector<double>>& groups);

// Pearson chi-square test of independence; effect size is Cramer's V.
StatResult chi_square(const std::vector<std::vector<double>>& table);

}  // namespace therif::stats
