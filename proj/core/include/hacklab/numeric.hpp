#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hacklab/param_vector.hpp"
#include "hacklab/rng.hpp"

namespace hacklab {

using Vec = std::vector<double>;

// Euclidean norm. Throws std::invalid_argument on a non-finite entry.
double l2_norm(std::span<const double> v);
inline double l2_norm(const ParamVector& v) { return l2_norm(v.values()); }

// Rescales g onto the ball of radius max_norm; returns g untouched (bitwise)
// when it already lies inside.
ParamVector clip_by_global_norm(ParamVector g, double max_norm);

// dim i.i.d. draws from N(0, sigma^2).
Vec gaussian_sample(Rng& rng, std::size_t dim, double sigma);

double sigmoid(double x);
// log(sigmoid(x)), stable for large |x|.
double log_sigmoid(double x);
// Binary entropy in nats; H(0) = H(1) = 0.
double binary_entropy(double p);
// KL(Bern(p) || Bern(q)) in nats.
double bernoulli_kl(double p, double q);
// KL(Bern(p) || Bern(sigmoid(q_logit))), stable when q saturates.
double bernoulli_kl_from_logit(double p, double q_logit);

// Sample mean with its standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

Estimate mean_and_se(std::span<const double> xs);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace hacklab
