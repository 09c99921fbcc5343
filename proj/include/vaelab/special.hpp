#pragma once

namespace vaelab {

/// Standard normal CDF via the complementary error function.
double norm_cdf(double z);
/// Standard normal log density.
double norm_logpdf(double z);
double norm_pdf(double z);

/// Regularized incomplete beta function I_x(a, b).
double betainc(double a, double b, double x);
/// Inverse of I_x(a, b) in x, by bisection to 1e-12.
double betainc_inv(double a, double b, double p);

/// Digamma function (asymptotic series with upward recurrence).
double digamma(double x);

}  // namespace vaelab
