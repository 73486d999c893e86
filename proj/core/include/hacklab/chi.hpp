#pragma once

#include <cstddef>

namespace hacklab {

// Regularized lower and upper incomplete gamma functions P(a, x), Q(a, x).
// Series for x < a + 1, continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// P(||Z|| > r) for Z ~ N(0, sigma^2 I_d).
double chi_tail(std::size_t d, double r, double sigma);

// E||Z|| = sigma sqrt(2) Gamma((d+1)/2) / Gamma(d/2).
double chi_mean(std::size_t d, double sigma);

}  // namespace hacklab
