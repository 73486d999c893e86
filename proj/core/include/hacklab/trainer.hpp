#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "hacklab/bt.hpp"
#include "hacklab/diagnostics.hpp"
#include "hacklab/errors.hpp"
#include "hacklab/gaussian_policy.hpp"
#include "hacklab/numeric.hpp"
#include "hacklab/policy.hpp"
#include "hacklab/rng.hpp"
#include "hacklab/sequence_policy.hpp"

namespace hacklab {

// All gradients in this module are ASCENT directions on the return
// J = -L. The trainer always moves phi <- phi + lr * g.

struct NoRegularizer {};
struct KlPenalty {
  double beta = 0.1;
};
// KL penalty whose reference is replaced by the current policy every
// `period` steps.
struct ResetPenalty {
  double beta = 0.1;
  std::size_t period = 50;
};
enum class MaskScope { hidden_only, all_layers };
struct GradientRegularizer {
  double gamma = 1e-3;
  double eps = 1e-3;
  MaskScope mask = MaskScope::hidden_only;
  double stage_clip = 10.0;
  // Reweight the reused actions by pi_phi2(a) / pi_phi(a) at the perturbed
  // point. Off by default: the plain two-gradient scheme reuses them as is.
  bool importance_weighting = false;
};
using Regularizer = std::variant<NoRegularizer, KlPenalty, ResetPenalty, GradientRegularizer>;

PerturbMask make_mask(const MlpSpec& spec, MaskScope scope);
// Mask shared by GR and the sharpness probe: GR's own scope when GR is
// active, else hidden-only when the net has hidden layers, else everything.
PerturbMask diagnostic_mask(const MlpSpec& spec, const Regularizer& reg);

struct TrainerConfig {
  double lr = 0.05;
  std::size_t steps = 200;
  std::size_t group_size = 8;
  std::size_t prompts_per_batch = 4;
  Regularizer regularizer = NoRegularizer{};
  double final_clip = 1.0;
  std::uint64_t seed = 0;
  // Held-out rollouts per state for the proxy/gold telemetry.
  std::size_t eval_rollouts = 16;
  // Steps between BT-loss and sharpness measurements; 0 disables them.
  std::size_t diag_every = 0;
  std::size_t bt_pairs = 128;
  SharpnessOptions probe;
  // Samples for the Monte-Carlo KL of sequence policies.
  std::size_t kl_samples = 64;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

template <class A>
struct Group {
  std::size_t state = 0;
  std::vector<A> actions;
  std::vector<double> rewards;
  double baseline = 0.0;
  std::vector<double> advantages;
};

// Advantages r_i - mean(r), computed as d_i - mean(d) with d_i = r_i - r_0
// so that a group of equal rewards yields exact zeros.
void group_advantages(std::span<const double> rewards, double& baseline, std::vector<double>& advantages);

template <class A>
Group<A> make_group(std::size_t state, std::vector<A> actions, std::vector<double> rewards) {
  if (actions.size() != rewards.size()) throw std::invalid_argument("make_group: actions/rewards size mismatch");
  if (actions.size() < 2) throw std::invalid_argument("make_group: a group needs N >= 2 actions");
  Group<A> g;
  g.state = state;
  g.actions = std::move(actions);
  g.rewards = std::move(rewards);
  group_advantages(g.rewards, g.baseline, g.advantages);
  return g;
}

template <class Policy, class Proxy>
std::vector<Group<typename Policy::Action>> rollout_groups(const Policy& policy, const Proxy& proxy,
                                                           std::span<const std::size_t> states,
                                                           std::size_t group_size, Rng& rng) {
  std::vector<Group<typename Policy::Action>> groups;
  groups.reserve(states.size());
  for (std::size_t s : states) {
    auto actions = policy.sample(s, group_size, rng);
    std::vector<double> rewards;
    rewards.reserve(actions.size());
    for (const auto& a : actions) rewards.push_back(proxy(s, a));
    groups.push_back(make_group(s, std::move(actions), std::move(rewards)));
  }
  return groups;
}

// (1/B) sum_groups (1/N) sum_i (r_i - b) grad log pi(a_i | s).
template <PolicyFamily Policy>
ParamVector grpo_gradient(const Policy& policy, std::span<const Group<typename Policy::Action>> groups) {
  if (groups.empty()) throw std::invalid_argument("grpo_gradient: no groups");
  ParamVector g = ParamVector::zeros_like(policy.params());
  const double b = static_cast<double>(groups.size());
  std::vector<double> w;
  for (const auto& grp : groups) {
    const std::size_t n = grp.actions.size();
    if (n < 2 || grp.advantages.size() != n) throw std::invalid_argument("grpo_gradient: group needs N >= 2 scored actions");
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = grp.advantages[i] / (static_cast<double>(n) * b);
    policy.accumulate_weighted_score(grp.state, std::span<const typename Policy::Action>(grp.actions),
                                     std::span<const double>(w), g);
  }
  return g;
}

// Exact gradient of -beta * mean_s KL(pi(.|s) || ref(.|s)).
ParamVector kl_gradient(const GaussianPolicy& policy, const ReferenceSnapshot& ref,
                        std::span<const std::size_t> states, double beta);
// Score-function estimate of the same from the group actions (which are
// draws from the current policy), with a per-group mean baseline.
ParamVector kl_gradient(const SequencePolicy& policy, const ReferenceSnapshot& ref,
                        std::span<const Group<TokenSeq>> groups, double beta);

struct GrGradient {
  ParamVector combined;
  ParamVector g1;  // clipped gradient at phi
  ParamVector g2;  // clipped gradient at the perturbed point
};

// Two-gradient finite-difference gradient regularization on an arbitrary
// ascent-gradient oracle:
//   g1 = clip(grad(phi)), phi2 = phi - eps * g1 (masked), g2 = clip(grad(phi2)),
//   combined = g1 + gamma (g2 - g1) / eps.
// phi2 steps along the loss gradient -g1, so (g2 - g1) / eps approximates
// -grad 0.5 ||grad J||^2 and ascending `combined` penalizes the gradient
// norm. gamma == 0 returns g1 without evaluating the oracle a second time.
GrGradient gr_combine(const std::function<ParamVector(const ParamVector&)>& ascent_grad, const ParamVector& phi,
                      double gamma, double eps, const PerturbMask& mask, double stage_clip,
                      std::int64_t step = 0);

// gr_combine with the Dr.GRPO gradient, reusing the groups' actions and
// rewards at the perturbed parameters (optionally importance weighted).
// Draws no random numbers.
template <PolicyFamily Policy>
GrGradient gr_step_gradient(const Policy& policy, std::span<const Group<typename Policy::Action>> groups,
                            double gamma, double eps, const PerturbMask& mask, double stage_clip,
                            std::int64_t step = 0, bool importance_weighting = false) {
  const auto oracle = [&](const ParamVector& p) {
    if (&p == &policy.params()) return grpo_gradient(policy, groups);
    const Policy moved = policy.with_params(p);
    if (!importance_weighting) return grpo_gradient(moved, groups);
    std::vector<Group<typename Policy::Action>> weighted(groups.begin(), groups.end());
    for (auto& grp : weighted) {
      for (std::size_t i = 0; i < grp.actions.size(); ++i)
        grp.advantages[i] *= std::exp(moved.log_prob(grp.state, grp.actions[i]) -
                                      policy.log_prob(grp.state, grp.actions[i]));
    }
    return grpo_gradient(moved, std::span<const Group<typename Policy::Action>>(weighted));
  };
  return gr_combine(oracle, policy.params(), gamma, eps, mask, stage_clip, step);
}

struct RunRecord {
  std::int64_t step = 0;
  double proxy_reward = 0.0;        // held-out rollouts
  double gold_reward = 0.0;         // same held-out rollouts
  double batch_proxy_reward = 0.0;  // training groups
  double grad_norm = 0.0;           // regularized direction before the final clip
  double kl_to_ref = 0.0;
  double kl_to_ref_se = 0.0;
  std::optional<Estimate> bt_loss;
  std::optional<double> sharpness;
  bool reset = false;
};

// One JSON object, fixed key order, no trailing newline.
std::string record_to_json(const RunRecord& r);
RunRecord record_from_json(const std::string& line);

class RunAborted : public DivergedError {
 public:
  RunAborted(const std::string& what, std::int64_t step, std::optional<RunRecord> last)
      : DivergedError(what, step), last_(std::move(last)) {}
  const std::optional<RunRecord>& last_record() const { return last_; }

 private:
  std::optional<RunRecord> last_;
};

// KL to a reference: exact for Gaussian policies, Monte-Carlo otherwise.
Estimate policy_kl(const GaussianPolicy& policy, const ReferenceSnapshot& ref, Rng& rng, std::size_t n);
Estimate policy_kl(const SequencePolicy& policy, const ReferenceSnapshot& ref, Rng& rng, std::size_t n);

// B distinct states when B <= num_states, otherwise uniform with replacement.
std::vector<std::size_t> select_states(std::size_t num_states, std::size_t batch, Rng& rng);

template <class Policy>
struct TrainResult {
  Policy policy;
  std::vector<RunRecord> records;
};

template <class Policy>
using StepObserver = std::function<void(const RunRecord&, const Policy&)>;

// Runs cfg.steps Dr.GRPO updates. Random streams: child(0) of the seed drives
// training rollouts, child(1) the held-out telemetry, child(2) diagnostics and
// child(3) Monte-Carlo KL, so measurement never perturbs training.
template <PolicyFamily Policy, class Proxy, class Gold>
TrainResult<Policy> train(Policy policy, const Proxy& proxy, const Gold& gold, const TrainerConfig& cfg,
                          const std::type_identity_t<StepObserver<Policy>>& observer = {}) {
  cfg.validate();
  const Rng root(cfg.seed);
  Rng train_rng = root.child(0);
  Rng eval_rng = root.child(1);
  const Rng diag_root = root.child(2);
  const Rng kl_root = root.child(3);

  std::vector<std::size_t> all_states(policy.num_states());
  for (std::size_t s = 0; s < all_states.size(); ++s) all_states[s] = s;

  const GradientRegularizer* gr = std::get_if<GradientRegularizer>(&cfg.regularizer);
  const PerturbMask mask = diagnostic_mask(policy.net().spec(), cfg.regularizer);
  const KlPenalty* klp = std::get_if<KlPenalty>(&cfg.regularizer);
  const ResetPenalty* rp = std::get_if<ResetPenalty>(&cfg.regularizer);
  const double beta = klp ? klp->beta : (rp ? rp->beta : 0.0);

  ReferenceSnapshot ref = snapshot(policy, 0);
  TrainResult<Policy> result{policy, {}};
  result.records.reserve(cfg.steps);

  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const auto step = static_cast<std::int64_t>(t);
    RunRecord rec;
    rec.step = step;
    if (rp && t > 0 && t % rp->period == 0) {
      ref = snapshot(policy, step);
      rec.reset = true;
    }
    {
      Rng kl_rng = kl_root.child(t);
      const Estimate kl = policy_kl(policy, ref, kl_rng, cfg.kl_samples);
      rec.kl_to_ref = kl.value;
      rec.kl_to_ref_se = kl.se;
    }
    {
      double p_sum = 0.0, g_sum = 0.0;
      for (std::size_t s : all_states) {
        for (const auto& a : policy.sample(s, cfg.eval_rollouts, eval_rng)) {
          p_sum += proxy(s, a);
          g_sum += gold(s, a);
        }
      }
      const double n = static_cast<double>(all_states.size() * cfg.eval_rollouts);
      rec.proxy_reward = p_sum / n;
      rec.gold_reward = g_sum / n;
    }
    if (cfg.diag_every > 0 && (t % cfg.diag_every == 0 || t + 1 == cfg.steps)) {
      Rng diag_rng = diag_root.child(t);
      rec.bt_loss = bt_loss_under_policy(proxy, policy, gold, cfg.bt_pairs, diag_rng).loss;
      rec.sharpness = sharpness_probe(policy, proxy, std::span<const std::size_t>(all_states), mask, cfg.probe, diag_rng);
    }

    const auto states = select_states(policy.num_states(), cfg.prompts_per_batch, train_rng);
    const auto groups = rollout_groups(policy, proxy, std::span<const std::size_t>(states), cfg.group_size, train_rng);
    double batch = 0.0;
    for (const auto& g : groups)
      for (double r : g.rewards) batch += r;
    rec.batch_proxy_reward = batch / static_cast<double>(groups.size() * cfg.group_size);

    const std::span<const Group<typename Policy::Action>> gspan(groups);
    ParamVector g;
    try {
      if (gr) {
        g = gr_step_gradient(policy, gspan, gr->gamma, gr->eps, mask, gr->stage_clip, step, gr->importance_weighting).combined;
      } else {
        g = grpo_gradient(policy, gspan);
      }
      if (beta > 0.0) {
        if constexpr (std::is_same_v<Policy, GaussianPolicy>) {
          g += kl_gradient(policy, ref, std::span<const std::size_t>(states), beta);
        } else {
          g += kl_gradient(policy, ref, gspan, beta);
        }
      }
    } catch (const DivergedError& e) {
      throw RunAborted(e.what(), step, result.records.empty() ? std::nullopt : std::optional(result.records.back()));
    }
    if (!g.all_finite())
      throw RunAborted("train: non-finite gradient", step,
                       result.records.empty() ? std::nullopt : std::optional(result.records.back()));
    rec.grad_norm = l2_norm(g);
    g = clip_by_global_norm(std::move(g), cfg.final_clip);
    ParamVector next = policy.params();
    next.axpy(cfg.lr, g);
    if (!next.all_finite()) throw RunAborted("train: non-finite parameters", step, rec);
    policy.set_params(std::move(next));

    result.records.push_back(rec);
    if (observer) observer(rec, policy);
  }
  result.policy = std::move(policy);
  return result;
}

struct RunSummary {
  double final_proxy = 0.0;  // smoothed over the last window
  double final_gold = 0.0;
  double peak_gold = 0.0;    // max of the smoothed gold series
  std::int64_t peak_step = 0;
  bool hacking = false;
};

// Trailing moving average with the given window (shorter at the start).
std::vector<double> moving_average(std::span<const double> xs, std::size_t window);

// Hacking: the smoothed gold reward ends at least 20% below its peak while
// the smoothed proxy reward ends above its value at the gold peak.
RunSummary summarize(std::span<const RunRecord> records, std::size_t window = 10);

}  // namespace hacklab
