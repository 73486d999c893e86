#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hacklab/mlp.hpp"
#include "hacklab/numeric.hpp"
#include "hacklab/policy.hpp"

namespace hacklab {

// Emitted tokens in order. Ends either with the end token or after
// max_len tokens.
using TokenSeq = std::vector<int>;

inline constexpr int kEndToken = 0;

// Autoregressive categorical policy: pi(a | s) = prod_t pi(a_t | s, a_<t).
// The logits network sees a one-hot prompt index, a one-hot previous token
// (with a begin-of-sequence slot) and a one-hot position.
class SequencePolicy {
 public:
  using Action = TokenSeq;

  SequencePolicy(Mlp net, ParamVector params, std::size_t vocab, std::size_t max_len,
                 std::size_t num_prompts);

  // Standard tanh network with the given hidden widths, seeded init.
  static SequencePolicy make(std::size_t vocab, std::size_t max_len, std::size_t num_prompts,
                             const std::vector<std::size_t>& hidden, Rng& rng, double output_scale = 1.0);
  static std::size_t feature_width(std::size_t vocab, std::size_t max_len, std::size_t num_prompts) {
    return num_prompts + vocab + 1 + max_len;
  }

  const Mlp& net() const { return net_; }
  const ParamVector& params() const { return params_; }
  void set_params(ParamVector params);
  SequencePolicy with_params(ParamVector params) const;

  std::size_t vocab() const { return vocab_; }
  std::size_t max_len() const { return max_len_; }
  std::size_t num_prompts() const { return num_prompts_; }
  std::size_t num_states() const { return num_prompts_; }

  // prev < 0 means begin of sequence.
  Vec features(std::size_t state, int prev, std::size_t pos) const;
  Vec step_log_probs(std::size_t state, int prev, std::size_t pos) const;

  std::vector<Action> sample(std::size_t state, std::size_t n, Rng& rng) const;
  double log_prob(std::size_t state, const Action& a) const;
  ParamVector grad_log_prob(std::size_t state, const Action& a) const;
  void accumulate_weighted_score(std::size_t state, std::span<const Action> actions,
                                 std::span<const double> weights, ParamVector& out) const;

  // Throws std::invalid_argument for malformed sequences.
  void check_action(const Action& a) const;

 private:
  void check_state(std::size_t state) const;

  Mlp net_;
  ParamVector params_;
  std::size_t vocab_;
  std::size_t max_len_;
  std::size_t num_prompts_;
};

// Monte-Carlo estimate of E_{a ~ pi}[log pi(a) - log pi_ref(a)] with n
// samples, cycling through `states`.
Estimate kl_to_reference(const SequencePolicy& policy, const ReferenceSnapshot& ref,
                         std::span<const std::size_t> states, Rng& rng, std::size_t n);

// Hamming distance with the shorter sequence padded by end tokens.
std::size_t hamming_distance(const TokenSeq& a, const TokenSeq& b);

}  // namespace hacklab
