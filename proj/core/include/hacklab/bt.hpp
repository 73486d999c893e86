#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hacklab/errors.hpp"
#include "hacklab/numeric.hpp"
#include "hacklab/reward_model.hpp"
#include "hacklab/rng.hpp"

namespace hacklab {

enum class Labeling { stochastic, hard };

template <class A>
struct PreferencePair {
  std::size_t state = 0;
  A winner;
  A loser;
  // Gold probability that `winner` is preferred: sigmoid(R*(w) - R*(l)).
  double p = 0.5;
};

// Scorers are any callables double(std::size_t state, const A& action).

// Draws a0, a1 i.i.d. from the policy at a uniformly chosen state and labels
// the pair with the gold reward. Identical draws are redrawn (up to 64
// times) so that winner != loser.
template <class Policy, class Gold>
std::vector<PreferencePair<typename Policy::Action>> sample_pairs(const Policy& policy, const Gold& gold,
                                                                 std::size_t n, Rng& rng,
                                                                 Labeling labeling = Labeling::stochastic) {
  using A = typename Policy::Action;
  if (n == 0) throw std::invalid_argument("sample_pairs: n must be >= 1");
  std::vector<PreferencePair<A>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = rng.uniform_index(policy.num_states());
    A a0 = policy.sample(s, 1, rng).front();
    A a1 = policy.sample(s, 1, rng).front();
    for (int tries = 0; a1 == a0; ++tries) {
      if (tries == 64) throw std::invalid_argument("sample_pairs: policy keeps emitting identical actions");
      a1 = policy.sample(s, 1, rng).front();
    }
    const double r0 = gold(s, a0);
    const double r1 = gold(s, a1);
    const double p1 = sigmoid(r1 - r0);
    bool first_wins;
    if (labeling == Labeling::hard) {
      first_wins = r1 > r0;
    } else {
      first_wins = rng.uniform() < p1;
    }
    if (first_wins) {
      out.push_back({s, std::move(a1), std::move(a0), p1});
    } else {
      out.push_back({s, std::move(a0), std::move(a1), sigmoid(r0 - r1)});
    }
  }
  return out;
}

// Per-pair BT losses -log sigmoid(R(w) - R(l)).
template <class A, class Scorer>
std::vector<double> bt_losses(const Scorer& rm, std::span<const PreferencePair<A>> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& pr : pairs) out.push_back(-log_sigmoid(rm(pr.state, pr.winner) - rm(pr.state, pr.loser)));
  return out;
}

template <class A, class Scorer>
double bt_loss(const Scorer& rm, std::span<const PreferencePair<A>> pairs) {
  if (pairs.empty()) throw std::invalid_argument("bt_loss: no pairs");
  const auto losses = bt_losses<A>(rm, pairs);
  // Averaging offsets from the first loss keeps identical losses exact.
  double offset = 0.0;
  for (double l : losses) offset += l - losses.front();
  return losses.front() + offset / static_cast<double>(losses.size());
}
template <class A, class Scorer>
double bt_loss(const Scorer& rm, const std::vector<PreferencePair<A>>& pairs) {
  return bt_loss<A>(rm, std::span<const PreferencePair<A>>(pairs));
}

// Mean binary entropy H(p) of the labeling probabilities; the BT loss of any
// scorer on stochastic labels is at least this in expectation.
template <class A>
Estimate label_entropy(std::span<const PreferencePair<A>> pairs) {
  if (pairs.empty()) throw std::invalid_argument("label_entropy: no pairs");
  std::vector<double> h;
  h.reserve(pairs.size());
  for (const auto& pr : pairs) h.push_back(binary_entropy(pr.p));
  return mean_and_se(h);
}

template <class A, class Scorer>
double rm_accuracy(const Scorer& rm, std::span<const PreferencePair<A>> pairs) {
  if (pairs.empty()) throw std::invalid_argument("rm_accuracy: no pairs");
  double hits = 0.0;
  for (const auto& pr : pairs) {
    const double w = rm(pr.state, pr.winner);
    const double l = rm(pr.state, pr.loser);
    hits += w > l ? 1.0 : (w == l ? 0.5 : 0.0);
  }
  return hits / static_cast<double>(pairs.size());
}
template <class A, class Scorer>
double rm_accuracy(const Scorer& rm, const std::vector<PreferencePair<A>>& pairs) {
  return rm_accuracy<A>(rm, std::span<const PreferencePair<A>>(pairs));
}

struct RmTrainingOptions {
  std::size_t epochs = 50;
  double lr = 0.1;
  std::size_t batch_size = 32;
};

struct RmTrainingResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  // False when training did not lower the loss.
  bool converged = false;
};

// Minibatch gradient descent on the BT loss; the visiting order is reshuffled
// from `rng` every epoch. Throws DivergedError (carrying the update index)
// if a loss or parameter turns non-finite.
template <class A>
RmTrainingResult train_rm(ProxyRewardModel& rm, std::span<const PreferencePair<A>> pairs,
                          const RmTrainingOptions& opt, Rng& rng) {
  if (pairs.empty()) throw std::invalid_argument("train_rm: no pairs");
  if (!(opt.lr > 0.0)) throw std::invalid_argument("train_rm: lr must be positive");
  if (opt.batch_size == 0) throw std::invalid_argument("train_rm: batch_size must be >= 1");
  RmTrainingResult res;
  res.initial_loss = bt_loss<A>(rm, pairs);
  res.final_loss = res.initial_loss;
  if (opt.epochs == 0) {
    res.converged = true;
    return res;
  }
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::int64_t update = 0;
  for (std::size_t e = 0; e < opt.epochs; ++e) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t stop = std::min(order.size(), start + opt.batch_size);
      ParamVector grad = ParamVector::zeros_like(rm.params());
      for (std::size_t k = start; k < stop; ++k) {
        const auto& pr = pairs[order[k]];
        const Vec xw = rm.features(pr.state, pr.winner);
        const Vec xl = rm.features(pr.state, pr.loser);
        const double margin = rm.score_features(xw) - rm.score_features(xl);
        // d/dm [-log sigmoid(m)] = -(1 - sigmoid(m))
        const double coef = -sigmoid(-margin);
        rm.accumulate_grad(xw, coef, grad);
        rm.accumulate_grad(xl, -coef, grad);
      }
      ParamVector next = rm.params();
      next.axpy(-opt.lr / static_cast<double>(stop - start), grad);
      if (!next.all_finite()) throw DivergedError("train_rm: non-finite parameters", update);
      rm.set_params(std::move(next));
      ++update;
    }
    const double loss = bt_loss<A>(rm, pairs);
    if (!std::isfinite(loss)) throw DivergedError("train_rm: non-finite loss", update);
    res.final_loss = loss;
  }
  res.converged = res.final_loss < res.initial_loss;
  return res;
}
template <class A>
RmTrainingResult train_rm(ProxyRewardModel& rm, const std::vector<PreferencePair<A>>& pairs,
                          const RmTrainingOptions& opt, Rng& rng) {
  return train_rm<A>(rm, std::span<const PreferencePair<A>>(pairs), opt, rng);
}

struct OnPolicyBtLoss {
  Estimate loss;     // BT loss of the proxy on fresh gold-labeled pairs
  Estimate entropy;  // mean H(p) on the same pairs
};

// On-policy diagnostic: n fresh pairs from the current policy, labeled by
// gold, scored by the proxy. Unlike sample_pairs, identical draws are kept
// (they contribute exactly log 2).
template <class Policy, class Proxy, class Gold>
OnPolicyBtLoss bt_loss_under_policy(const Proxy& proxy, const Policy& policy, const Gold& gold,
                                    std::size_t n, Rng& rng, Labeling labeling = Labeling::stochastic) {
  if (n < 2) throw std::invalid_argument("bt_loss_under_policy: n must be >= 2");
  std::vector<double> losses, entropies;
  losses.reserve(n);
  entropies.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = rng.uniform_index(policy.num_states());
    const auto a0 = policy.sample(s, 1, rng).front();
    const auto a1 = policy.sample(s, 1, rng).front();
    const double g = gold(s, a1) - gold(s, a0);
    const double p1 = sigmoid(g);
    const bool first_wins = labeling == Labeling::hard ? g > 0.0 : rng.uniform() < p1;
    const double m = proxy(s, a1) - proxy(s, a0);
    losses.push_back(-log_sigmoid(first_wins ? m : -m));
    entropies.push_back(binary_entropy(p1));
  }
  return {mean_and_se(losses), mean_and_se(entropies)};
}

// JSONL pair files: one object per line,
//   {"state": s, "a0": <action>, "a1": <action>, "label": 0|1, "p": p}
// where label is the index of the preferred action and p its gold
// preference probability.
void write_pairs_jsonl(std::ostream& out, std::span<const PreferencePair<Vec>> pairs);
void write_pairs_jsonl(std::ostream& out, std::span<const PreferencePair<TokenSeq>> pairs);
std::vector<PreferencePair<Vec>> read_vector_pairs_jsonl(std::istream& in);
std::vector<PreferencePair<TokenSeq>> read_token_pairs_jsonl(std::istream& in);

}  // namespace hacklab
