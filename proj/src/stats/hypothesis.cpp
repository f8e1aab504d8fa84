#include "therif/stats/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "therif/core/error.hpp"
#include "therif/stats/special_functions.hpp"

namespace therif::stats {

namespace {

void require_size(std::span<const double> xs, std::size_t n, const char* what) {
  if (xs.size() < n) throw StatsError(std::string(what) + " needs at least " + std::to_string(n) + " values");
}

std::vector<double> differences(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StatsError("paired samples must have equal lengths");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

double pooled_sd(std::span<const double> a, std::span<const double> b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  return std::sqrt(((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0));
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) throw StatsError("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  require_size(xs, 2, "variance");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

StatResult welch_t(std::span<const double> a, std::span<const double> b) {
  require_size(a, 2, "welch_t");
  require_size(b, 2, "welch_t");
  const double va = sample_variance(a) / static_cast<double>(a.size());
  const double vb = sample_variance(b) / static_cast<double>(b.size());
  if (va == 0.0 && vb == 0.0) throw StatsError("welch_t: both samples have zero variance");
  StatResult r;
  r.statistic = (mean(a) - mean(b)) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  r.p_value = student_t_two_sided_p(r.statistic, r.df);
  r.effect_size = cohens_d(a, b, false);
  return r;
}

StatResult student_t(std::span<const double> a, std::span<const double> b, bool paired) {
  StatResult r;
  double diff = 0.0;
  double se = 0.0;
  if (paired) {
    const auto d = differences(a, b);
    require_size(d, 2, "paired t");
    diff = mean(d);
    se = std::sqrt(sample_variance(d) / static_cast<double>(d.size()));
    r.df = static_cast<double>(d.size() - 1);
  } else {
    require_size(a, 2, "student_t");
    require_size(b, 2, "student_t");
    diff = mean(a) - mean(b);
    se = pooled_sd(a, b) * std::sqrt(1.0 / static_cast<double>(a.size()) + 1.0 / static_cast<double>(b.size()));
    r.df = static_cast<double>(a.size() + b.size() - 2);
  }
  if (se == 0.0) {
    if (diff != 0.0) throw StatsError("student_t: zero variance with a nonzero mean difference");
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.effect_size = 0.0;
    return r;
  }
  r.statistic = diff / se;
  r.p_value = student_t_two_sided_p(r.statistic, r.df);
  r.effect_size = cohens_d(a, b, paired);
  return r;
}

double cohens_d(std::span<const double> a, std::span<const double> b, bool paired) {
  double num = 0.0;
  double sd = 0.0;
  if (paired) {
    const auto d = differences(a, b);
    require_size(d, 2, "cohens_d");
    num = mean(d);
    sd = std::sqrt(sample_variance(d));
  } else {
    require_size(a, 2, "cohens_d");
    require_size(b, 2, "cohens_d");
    num = mean(a) - mean(b);
    sd = pooled_sd(a, b);
  }
  if (sd == 0.0) {
    if (num == 0.0) return 0.0;
    throw StatsError("cohens_d: zero pooled standard deviation");
  }
  return num / sd;
}

StatResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw StatsError("one_way_anova needs at least 2 groups");
  std::size_t n_total = 0;
  double grand_sum = 0.0;
  for (const auto& g : groups) {
    require_size(g, 2, "one_way_anova group");
    n_total += g.size();
    grand_sum += std::accumulate(g.begin(), g.end(), 0.0);
  }
  const double grand_mean = grand_sum / static_cast<double>(n_total);
  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ss_between += static_cast<double>(g.size()) * (m - grand_mean) * (m - grand_mean);
    for (double x : g) ss_within += (x - m) * (x - m);
  }
  StatResult r;
  r.df = static_cast<double>(groups.size() - 1);
  r.df2 = static_cast<double>(n_total - groups.size());
  const double total = ss_between + ss_within;
  r.effect_size = total > 0.0 ? ss_between / total : 0.0;
  if (ss_between == 0.0) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  if (ss_within == 0.0) {
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.statistic = (ss_between / r.df) / (ss_within / r.df2);
  r.p_value = f_sf(r.statistic, r.df, r.df2);
  return r;
}

StatResult chi_square(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  if (rows < 2) throw StatsError("chi_square needs at least 2 rows");
  const std::size_t cols = table.front().size();
  if (cols < 2) throw StatsError("chi_square needs at least 2 columns");
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (table[i].size() != cols) throw StatsError("chi_square: ragged table");
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = table[i][j];
      if (!(v >= 0.0) || !std::isfinite(v)) throw StatsError("chi_square: counts must be non-negative");
      row_sum[i] += v;
      col_sum[j] += v;
      total += v;
    }
  }
  if (std::any_of(row_sum.begin(), row_sum.end(), [](double s) { return s == 0.0; }) ||
      std::any_of(col_sum.begin(), col_sum.end(), [](double s) { return s == 0.0; })) {
    throw StatsError("chi_square: zero marginal");
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      const double diff = table[i][j] - expected;
      stat += diff * diff / expected;
    }
  }
  StatResult r;
  r.statistic = stat;
  r.df = static_cast<double>((rows - 1) * (cols - 1));
  r.p_value = chi_square_sf(stat, r.df);
  r.effect_size = std::sqrt(stat / (total * static_cast<double>(std::min(rows, cols) - 1)));
  return r;
}

}  // namespace therif::stats
