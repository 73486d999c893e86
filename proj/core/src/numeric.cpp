#include "hacklab/numeric.hpp"

#include <cmath>
#include <stdexcept>

namespace hacklab {

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("l2_norm: non-finite entry");
    sum += x * x;
  }
  return std::sqrt(sum);
}

ParamVector clip_by_global_norm(ParamVector g, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_by_global_norm: max_norm must be positive");
  const double norm = l2_norm(g);
  if (norm <= max_norm) return g;
  g *= max_norm / norm;
  return g;
}

Vec gaussian_sample(Rng& rng, std::size_t dim, double sigma) {
  if (dim == 0) throw std::invalid_argument("gaussian_sample: dim must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("gaussian_sample: sigma must be positive");
  Vec out(dim);
  for (double& x : out) x = sigma * rng.normal();
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

double bernoulli_kl(double p, double q) {
  double kl = 0.0;
  if (p > 0.0) kl += p * (std::log(p) - std::log(q));
  if (p < 1.0) kl += (1.0 - p) * (std::log1p(-p) - std::log1p(-q));
  return kl;
}

Estimate mean_and_se(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_and_se: empty sample");
  const auto n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double bernoulli_kl_from_logit(double p, double q_logit) {
  double kl = 0.0;
  if (p > 0.0) kl += p * (std::log(p) - log_sigmoid(q_logit));
  if (p < 1.0) kl += (1.0 - p) * (std::log1p(-p) - log_sigmoid(-q_logit));
  return kl;
}

}  // namespace hacklab
