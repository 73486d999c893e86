#include "hacklab/sequence_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hacklab {

namespace {

Vec log_softmax(const Vec& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  const double lse = m + std::log(sum);
  Vec out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

}  // namespace

SequencePolicy::SequencePolicy(Mlp net, ParamVector params, std::size_t vocab, std::size_t max_len,
                               std::size_t num_prompts)
    : net_(std::move(net)), vocab_(vocab), max_len_(max_len), num_prompts_(num_prompts) {
  if (vocab_ < 2) throw std::invalid_argument("SequencePolicy: vocab must be >= 2");
  if (max_len_ < 1) throw std::invalid_argument("SequencePolicy: max_len must be >= 1");
  if (num_prompts_ < 1) throw std::invalid_argument("SequencePolicy: need at least one prompt");
  if (net_.spec().input_width() != feature_width(vocab_, max_len_, num_prompts_))
    throw std::invalid_argument("SequencePolicy: network input width must be " +
                                std::to_string(feature_width(vocab_, max_len_, num_prompts_)));
  if (net_.spec().output_width() != vocab_)
    throw std::invalid_argument("SequencePolicy: network must output one logit per token");
  set_params(std::move(params));
}

SequencePolicy SequencePolicy::make(std::size_t vocab, std::size_t max_len, std::size_t num_prompts,
                                    const std::vector<std::size_t>& hidden, Rng& rng, double output_scale) {
  std::vector<std::size_t> widths{feature_width(vocab, max_len, num_prompts)};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(vocab);
  Mlp net(MlpSpec::standard(widths));
  ParamVector params = net.init_params(rng);
  auto out = params.segment(params.layout().size() - 1);
  for (double& w : out.first(out.size() - vocab)) w *= output_scale;
  return SequencePolicy(std::move(net), std::move(params), vocab, max_len, num_prompts);
}

void SequencePolicy::set_params(ParamVector params) {
  if (params.size() != net_.num_params() || !(params.layout() == *net_.layout()))
    throw std::invalid_argument("SequencePolicy: parameter layout does not match network");
  params_ = std::move(params);
}

SequencePolicy SequencePolicy::with_params(ParamVector params) const {
  SequencePolicy copy = *this;
  copy.set_params(std::move(params));
  return copy;
}

void SequencePolicy::check_state(std::size_t state) const {
  if (state >= num_prompts_)
    throw std::invalid_argument("SequencePolicy: prompt index " + std::to_string(state) +
                                " out of range");
}

Vec SequencePolicy::features(std::size_t state, int prev, std::size_t pos) const {
  check_state(state);
  if (pos >= max_len_) throw std::invalid_argument("SequencePolicy: position out of range");
  Vec f(net_.spec().input_width(), 0.0);
  f[state] = 1.0;
  const std::size_t prev_slot = prev < 0 ? vocab_ : static_cast<std::size_t>(prev);
  f[num_prompts_ + prev_slot] = 1.0;
  f[num_prompts_ + vocab_ + 1 + pos] = 1.0;
  return f;
}

Vec SequencePolicy::step_log_probs(std::size_t state, int prev, std::size_t pos) const {
  return log_softmax(net_.forward(params_, features(state, prev, pos)));
}

void SequencePolicy::check_action(const Action& a) const {
  if (a.empty()) throw std::invalid_argument("SequencePolicy: empty token sequence");
  if (a.size() > max_len_) throw std::invalid_argument("SequencePolicy: sequence longer than max_len");
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t] < 0 || static_cast<std::size_t>(a[t]) >= vocab_)
      throw std::invalid_argument("SequencePolicy: token " + std::to_string(a[t]) +
                                  " out of vocabulary");
    if (a[t] == kEndToken && t + 1 != a.size())
      throw std::invalid_argument("SequencePolicy: end token before the last position");
  }
  if (a.back() != kEndToken && a.size() != max_len_)
    throw std::invalid_argument("SequencePolicy: sequence stops early without end token");
}

std::vector<SequencePolicy::Action> SequencePolicy::sample(std::size_t state, std::size_t n,
                                                           Rng& rng) const {
  if (n == 0) throw std::invalid_argument("SequencePolicy::sample: n must be >= 1");
  check_state(state);
  std::vector<Action> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Action seq;
    int prev = -1;
    for (std::size_t t = 0; t < max_len_; ++t) {
      const Vec lp = step_log_probs(state, prev, t);
      const double u = rng.uniform();
      double cum = 0.0;
      int tok = static_cast<int>(vocab_) - 1;
      for (std::size_t k = 0; k < vocab_; ++k) {
        cum += std::exp(lp[k]);
        if (u < cum) {
          tok = static_cast<int>(k);
          break;
        }
      }
      seq.push_back(tok);
      prev = tok;
      if (tok == kEndToken) break;
    }
    out.push_back(std::move(seq));
  }
  return out;
}

double SequencePolicy::log_prob(std::size_t state, const Action& a) const {
  check_state(state);
  check_action(a);
  double total = 0.0;
  int prev = -1;
  for (std::size_t t = 0; t < a.size(); ++t) {
    total += step_log_probs(state, prev, t)[static_cast<std::size_t>(a[t])];
    prev = a[t];
  }
  return total;
}

ParamVector SequencePolicy::grad_log_prob(std::size_t state, const Action& a) const {
  ParamVector out = ParamVector::zeros(net_.layout());
  const double w = 1.0;
  accumulate_weighted_score(state, std::span<const Action>(&a, 1), std::span<const double>(&w, 1),
                            out);
  return out;
}

void SequencePolicy::accumulate_weighted_score(std::size_t state, std::span<const Action> actions,
                                               std::span<const double> weights,
                                               ParamVector& out) const {
  if (actions.size() != weights.size())
    throw std::invalid_argument("accumulate_weighted_score: actions/weights size mismatch");
  check_state(state);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Action& a = actions[i];
    check_action(a);
    if (weights[i] == 0.0) continue;
    int prev = -1;
    for (std::size_t t = 0; t < a.size(); ++t) {
      const MlpTrace trace = net_.forward_trace(params_, features(state, prev, t));
      const Vec lp = log_softmax(trace.result());
      // d log softmax_a / d z = e_a - p
      Vec upstream(vocab_);
      for (std::size_t k = 0; k < vocab_; ++k) upstream[k] = -std::exp(lp[k]);
      upstream[static_cast<std::size_t>(a[t])] += 1.0;
      net_.accumulate_backward(params_, trace, upstream, weights[i], out);
      prev = a[t];
    }
  }
}

Estimate kl_to_reference(const SequencePolicy& policy, const ReferenceSnapshot& ref,
                         std::span<const std::size_t> states, Rng& rng, std::size_t n) {
  if (states.empty()) throw std::invalid_argument("kl_to_reference: no states");
  if (n < 2) throw std::invalid_argument("kl_to_reference: need at least two samples");
  if (!ref.params().same_layout(policy.params()))
    throw std::invalid_argument("kl_to_reference: reference architecture differs from policy");
  const SequencePolicy reference = policy.with_params(ref.params());
  std::vector<double> diffs;
  diffs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = states[i % states.size()];
    const auto a = policy.sample(s, 1, rng).front();
    diffs.push_back(policy.log_prob(s, a) - reference.log_prob(s, a));
  }
  return mean_and_se(diffs);
}

std::size_t hamming_distance(const TokenSeq& a, const TokenSeq& b) {
  const std::size_t n = std::max(a.size(), b.size());
  std::size_t d = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const int x = t < a.size() ? a[t] : kEndToken;
    const int y = t < b.size() ? b[t] : kEndToken;
    d += x != y;
  }
  return d;
}

}  // namespace hacklab
