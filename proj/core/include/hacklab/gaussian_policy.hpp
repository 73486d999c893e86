#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hacklab/mlp.hpp"
#include "hacklab/numeric.hpp"
#include "hacklab/policy.hpp"

namespace hacklab {

// pi(a | s) = N(mu_phi(s), sigma^2 I). States are fixed feature vectors
// addressed by index; sigma is never trained.
class GaussianPolicy {
 public:
  using Action = Vec;

  GaussianPolicy(Mlp net, ParamVector params, double sigma, std::vector<Vec> states);

  // Standard tanh mean network over the given states. Output-layer weights
  // are additionally scaled by output_scale.
  static GaussianPolicy make(std::vector<Vec> states, const std::vector<std::size_t>& hidden,
                             std::size_t action_dim, double sigma, Rng& rng, double output_scale = 1.0);

  const Mlp& net() const { return net_; }
  const ParamVector& params() const { return params_; }
  void set_params(ParamVector params);
  GaussianPolicy with_params(ParamVector params) const;

  double sigma() const { return sigma_; }
  std::size_t action_dim() const { return net_.spec().output_width(); }
  std::size_t num_states() const { return states_.size(); }
  const Vec& state(std::size_t s) const { return states_.at(s); }
  const std::vector<Vec>& states() const { return states_; }

  Vec mean(std::size_t s) const;
  // Average of mean(s) over all states.
  Vec average_mean() const;
  // Shifts the output bias so that average_mean() equals target.
  GaussianPolicy recentered(std::span<const double> target) const;

  std::vector<Action> sample(std::size_t s, std::size_t n, Rng& rng) const;
  double log_prob(std::size_t s, const Action& a) const;
  // Backprop of (a - mu) / sigma^2 through the mean network.
  ParamVector grad_log_prob(std::size_t s, const Action& a) const;
  void accumulate_weighted_score(std::size_t s, std::span<const Action> actions,
                                 std::span<const double> weights, ParamVector& out) const;

  // Rows d mu_k(s) / d params, one per action dimension.
  std::vector<ParamVector> mean_jacobian(std::size_t s) const;

 private:
  void check_action(const Action& a) const;

  Mlp net_;
  ParamVector params_;
  double sigma_;
  std::vector<Vec> states_;
};

// Mean over `states` of ||mu(s) - mu_ref(s)||^2 / (2 sigma^2).
double kl_to_reference(const GaussianPolicy& policy, const ReferenceSnapshot& ref,
                       std::span<const std::size_t> states);
// Same, averaged over every state of the policy.
double kl_to_reference(const GaussianPolicy& policy, const ReferenceSnapshot& ref);

}  // namespace hacklab
