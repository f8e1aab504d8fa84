#pragma once

namespace therif::stats {

// Regularized incomplete beta I_x(a, b), evaluated with the Lentz continued
// fraction and the usual x > (a+1)/(a+b+2) reflection.
double incomplete_beta(double a, double b, double x);

// Regularized lower / upper incomplete gamma P(a, x), Q(a, x). Series for
// x < a + 1, continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Student t with `df` degrees of freedom (df may be fractional).
double student_t_cdf(double t, double df);
double student_t_two_sided_p(double t, double df);

// Upper tail of the F distribution.
double f_sf(double f, double df1, double df2);
double f_cdf(double f, double df1, double df2);

// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double df);
double chi_square_cdf(double x, double df);

}  // namespace therif::stats
