#include "therif/stats/special_functions.hpp"

#include <cmath>
#include <limits>

#include "therif/core/error.hpp"

namespace therif::stats {

namespace {

constexpr int kMaxIterations = 10000;
constexpr double kEpsilon = 1e-16;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEpsilon) return h;
  }
  throw StatsError("incomplete beta continued fraction did not converge");
}

double gamma_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxIterations; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEpsilon) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw StatsError("incomplete gamma series did not converge");
}

// Q(a, x) by continued fraction.
double gamma_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEpsilon) {
      return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
  }
  throw StatsError("incomplete gamma continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw StatsError("incomplete beta needs a, b > 0");
  if (std::isnan(x)) throw StatsError("incomplete beta of NaN");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw StatsError("incomplete gamma needs a > 0");
  if (std::isnan(x)) throw StatsError("incomplete gamma of NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_continued_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw StatsError("incomplete gamma needs a > 0");
  if (std::isnan(x)) throw StatsError("incomplete gamma of NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_continued_fraction(a, x);
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw StatsError("t distribution needs df > 0");
  if (std::isnan(t)) throw StatsError("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided_p(t, df);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double f_sf(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw StatsError("F distribution needs positive df");
  if (std::isnan(f)) throw StatsError("F statistic is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f));
}

double f_cdf(double f, double df1, double df2) {
  if (f <= 0.0) return 0.0;
  if (std::isinf(f)) return 1.0;
  return incomplete_beta(0.5 * df1, 0.5 * df2, df1 * f / (df1 * f + df2));
}

double chi_square_sf(double x, double df) {
  if (!(df > 0.0)) throw StatsError("chi-square needs df > 0");
  return gamma_q(0.5 * df, 0.5 * x);
}

double chi_square_cdf(double x, double df) {
  if (!(df > 0.0)) throw StatsError("chi-square needs df > 0");
  return gamma_p(0.5 * df, 0.5 * x);
}

}  // namespace therif::stats
