#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hacklab/param_vector.hpp"
#include "hacklab/rng.hpp"

namespace hacklab {

// What the trainer and diagnostics need from a policy family.
template <class P>
concept PolicyFamily = requires(const P& p, P& mut, std::size_t s, const typename P::Action& a,
                                std::span<const typename P::Action> actions,
                                std::span<const double> weights, Rng& rng, ParamVector& out) {
  typename P::Action;
  { p.params() } -> std::same_as<const ParamVector&>;
  { p.with_params(ParamVector{}) } -> std::same_as<P>;
  { mut.set_params(ParamVector{}) };
  { p.num_states() } -> std::convertible_to<std::size_t>;
  { p.sample(s, std::size_t{1}, rng) } -> std::same_as<std::vector<typename P::Action>>;
  { p.log_prob(s, a) } -> std::convertible_to<double>;
  { p.grad_log_prob(s, a) } -> std::same_as<ParamVector>;
  // out += sum_i weights[i] * grad log pi(actions[i] | s)
  { p.accumulate_weighted_score(s, actions, weights, out) };
};

// Frozen copy of a policy's parameters.
class ReferenceSnapshot {
 public:
  ReferenceSnapshot(ParamVector params, std::int64_t step)
      : params_(std::move(params)), step_(step) {}

  const ParamVector& params() const { return params_; }
  std::int64_t step() const { return step_; }

 private:
  ParamVector params_;
  std::int64_t step_;
};

template <PolicyFamily P>
ReferenceSnapshot snapshot(const P& policy, std::int64_t step) {
  return ReferenceSnapshot(policy.params(), step);
}

}  // namespace hacklab
