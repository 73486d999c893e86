#include "hacklab/chi.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hacklab {

namespace {

constexpr int kMaxIter = 10000;
constexpr double kEps = 1e-16;

double series_p(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double continued_fraction_q(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_args(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("incomplete gamma: a must be positive");
  if (!(x >= 0.0)) throw std::invalid_argument("incomplete gamma: x must be >= 0");
}

}  // namespace

double gamma_p(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? series_p(a, x) : 1.0 - continued_fraction_q(a, x);
}

double gamma_q(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - series_p(a, x) : continued_fraction_q(a, x);
}

double chi_tail(std::size_t d, double r, double sigma) {
  if (d == 0) throw std::invalid_argument("chi_tail: d must be >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("chi_tail: sigma must be >= 0");
  if (r < 0.0) return 1.0;
  if (sigma == 0.0) return 0.0;
  const double z = r / sigma;
  return gamma_q(0.5 * static_cast<double>(d), 0.5 * z * z);
}

double chi_mean(std::size_t d, double sigma) {
  if (d == 0) throw std::invalid_argument("chi_mean: d must be >= 1");
  const double k = static_cast<double>(d);
  return sigma * std::sqrt(2.0) * std::exp(std::lgamma(0.5 * (k + 1.0)) - std::lgamma(0.5 * k));
}

}  // namespace hacklab
