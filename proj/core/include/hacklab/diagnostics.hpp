#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hacklab/bound_report.hpp"
#include "hacklab/gaussian_policy.hpp"
#include "hacklab/landscape.hpp"
#include "hacklab/mlp.hpp"
#include "hacklab/numeric.hpp"
#include "hacklab/rng.hpp"
#include "hacklab/sequence_policy.hpp"

namespace hacklab {

// Random direction on the perturbable layers only, scaled to norm `scale`.
ParamVector masked_gaussian_direction(const ParamVector& like, const PerturbMask& mask, double scale,
                                      Rng& rng);

// max_i [J(phi) - J(phi + eps_i)] over k directions of norm probe_scale,
// floored at 0. `objective` must use common random numbers internally.
double sharpness_probe_objective(const std::function<double(const ParamVector&)>& objective,
                                 const ParamVector& phi, const PerturbMask& mask, std::size_t k,
                                 double probe_scale, Rng& rng);

struct SharpnessOptions {
  std::size_t k = 32;
  double probe_scale = 1e-2;
  // Rollouts per state for each return estimate.
  std::size_t rollouts = 16;
};

// Monte-Carlo return of `policy` under `proxy` averaged over `states`.
// Rollout j of state s draws from rng_seed.child(s * rollouts + j), so two
// calls with different parameters share their random numbers.
template <class Policy, class Proxy>
double mc_return(const Policy& policy, const Proxy& proxy, std::span<const std::size_t> states,
                 std::size_t rollouts, const Rng& rng_seed) {
  double total = 0.0;
  for (std::size_t s : states) {
    for (std::size_t j = 0; j < rollouts; ++j) {
      Rng r = rng_seed.child(s * rollouts + j);
      total += proxy(s, policy.sample(s, 1, r).front());
    }
  }
  return total / static_cast<double>(states.size() * rollouts);
}

template <class Policy, class Proxy>
double sharpness_probe(const Policy& policy, const Proxy& proxy, std::span<const std::size_t> states,
                       const PerturbMask& mask, const SharpnessOptions& opt, Rng& rng) {
  if (opt.k == 0) throw std::invalid_argument("sharpness_probe: k must be >= 1");
  if (states.empty()) throw std::invalid_argument("sharpness_probe: no states");
  if (opt.rollouts == 0) throw std::invalid_argument("sharpness_probe: rollouts must be >= 1");
  const Rng crn = rng.child(0x5eed);
  rng.next_u64();
  const auto objective = [&](const ParamVector& p) {
    return mc_return(policy.with_params(p), proxy, states, opt.rollouts, crn);
  };
  return sharpness_probe_objective(objective, policy.params(), mask, opt.k, opt.probe_scale, rng);
}

// Action distance used by the pairwise diagnostics: Euclidean for vectors,
// Hamming for token sequences.
inline double action_distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}
inline double action_distance(const TokenSeq& a, const TokenSeq& b) {
  return static_cast<double>(hamming_distance(a, b));
}

template <class A>
struct ActionPair {
  std::size_t state = 0;
  A a1;
  A a2;
};

// n i.i.d. pairs at uniformly drawn states (or all at `state` when given).
template <class Policy>
std::vector<ActionPair<typename Policy::Action>> sample_action_pairs(const Policy& policy, std::size_t n,
                                                                     Rng& rng, long state = -1) {
  std::vector<ActionPair<typename Policy::Action>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = state >= 0 ? static_cast<std::size_t>(state) : rng.uniform_index(policy.num_states());
    auto a = policy.sample(s, 2, rng);
    out.push_back({s, std::move(a[0]), std::move(a[1])});
  }
  return out;
}

// Fraction of pairs in the sharpness set: distance <= delta and reward gap > K.
template <class A, class Reward>
Estimate violation_fraction(std::span<const ActionPair<A>> pairs, const Reward& reward, double K, double delta) {
  if (pairs.empty()) throw std::invalid_argument("violation_fraction: no pairs");
  double hits = 0.0;
  for (const auto& pr : pairs) {
    if (action_distance(pr.a1, pr.a2) > delta) continue;
    if (std::abs(reward(pr.state, pr.a1) - reward(pr.state, pr.a2)) > K) hits += 1.0;
  }
  const double n = static_cast<double>(pairs.size());
  const double p = hits / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

template <class Policy, class Reward>
Estimate violation_rate(const Policy& policy, const Reward& reward, double K, double delta, std::size_t n,
                        Rng& rng, long state = -1) {
  if (!(K > 0.0) || !(delta > 0.0)) throw std::invalid_argument("violation_rate: K and delta must be positive");
  if (n < 1000) throw std::invalid_argument("violation_rate: n must be >= 1000");
  const auto pairs = sample_action_pairs(policy, n, rng, state);
  return violation_fraction<typename Policy::Action>(std::span(pairs), reward, K, delta);
}

// Pairwise robustness bound at one state: violation rate of `landscape`
// under the policy at state s versus 2 P(||Z|| > r) with
// r = (K/delta - ||grad R(mu)||) / beta.
BoundReport check_pairwise_bound(const BumpLandscape& landscape, const GaussianPolicy& policy, double K,
                                 double delta, std::size_t n, Rng& rng, std::size_t state = 0);

enum class LhatMode {
  monte_carlo,  // return estimated from sampled actions with common random numbers
  analytic,     // closed-form Gaussian-smoothed return
};

struct GradientBoundOptions {
  LhatMode mode = LhatMode::monte_carlo;
  std::size_t rollouts = 256;
  std::size_t state = 0;
};

// Flatness-implies-small-gradient bound at one state: measures L-hat over n
// parameter perturbations with norm <= E_ball, reach D* = s_min(J_mu) E_ball
// (reported alongside s_max), and checks ||grad R(mu)|| <= G with
// G = L-hat / D* + beta D* / 2 + beta E||Z||.
BoundReport check_gradient_bound(const BumpLandscape& landscape, const GaussianPolicy& policy, double E_ball,
                                 std::size_t n, Rng& rng, const GradientBoundOptions& opt = {});

// Excess BT loss of `proxy` against `gold` on n policy pairs versus
// 2 (sigmoid(K) - sigmoid(L delta))^2 P(S_{K,delta}(proxy)). Throws
// std::invalid_argument unless K > L delta with L = gold.lipschitz().
BoundReport check_bt_lower_bound(const BumpLandscape& gold, const BumpLandscape& proxy,
                                 const GaussianPolicy& policy, double K, double delta, std::size_t n, Rng& rng,
                                 std::size_t state = 0);

// Pearson correlation. Throws std::invalid_argument for mismatched or short
// (< 10) series and std::domain_error when either series has zero variance.
double correlate(std::span<const double> a, std::span<const double> b);

// Largest and smallest singular values of the mean Jacobian at state s.
struct JacobianSpectrum {
  double s_max = 0.0;
  double s_min = 0.0;
};
JacobianSpectrum mean_jacobian_spectrum(const GaussianPolicy& policy, std::size_t s);

}  // namespace hacklab
