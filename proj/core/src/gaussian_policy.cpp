#include "hacklab/gaussian_policy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hacklab {

GaussianPolicy::GaussianPolicy(Mlp net, ParamVector params, double sigma, std::vector<Vec> states)
    : net_(std::move(net)), params_(std::move(params)), sigma_(sigma), states_(std::move(states)) {
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_))
    throw std::invalid_argument("GaussianPolicy: sigma must be positive");
  if (states_.empty()) throw std::invalid_argument("GaussianPolicy: need at least one state");
  for (const auto& s : states_)
    if (s.size() != net_.spec().input_width())
      throw std::invalid_argument("GaussianPolicy: state width does not match mean network");
  set_params(std::move(params_));
}

GaussianPolicy GaussianPolicy::make(std::vector<Vec> states, const std::vector<std::size_t>& hidden,
                                    std::size_t action_dim, double sigma, Rng& rng, double output_scale) {
  if (states.empty()) throw std::invalid_argument("GaussianPolicy::make: need at least one state");
  std::vector<std::size_t> widths{states.front().size()};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(action_dim);
  Mlp net(MlpSpec::standard(widths));
  ParamVector params = net.init_params(rng);
  auto out = params.segment(params.layout().size() - 1);
  for (double& w : out.first(out.size() - action_dim)) w *= output_scale;
  return GaussianPolicy(std::move(net), std::move(params), sigma, std::move(states));
}

void GaussianPolicy::set_params(ParamVector params) {
  if (params.size() != net_.num_params() || !(params.layout() == *net_.layout()))
    throw std::invalid_argument("GaussianPolicy: parameter layout does not match network");
  params_ = std::move(params);
}

GaussianPolicy GaussianPolicy::with_params(ParamVector params) const {
  GaussianPolicy copy = *this;
  copy.set_params(std::move(params));
  return copy;
}

Vec GaussianPolicy::mean(std::size_t s) const { return net_.forward(params_, state(s)); }

Vec GaussianPolicy::average_mean() const {
  Vec avg(action_dim(), 0.0);
  for (std::size_t s = 0; s < num_states(); ++s) {
    const Vec mu = mean(s);
    for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += mu[k];
  }
  for (double& v : avg) v /= static_cast<double>(num_states());
  return avg;
}

GaussianPolicy GaussianPolicy::recentered(std::span<const double> target) const {
  if (target.size() != action_dim()) throw std::invalid_argument("recentered: target dimension mismatch");
  const Vec avg = average_mean();
  ParamVector p = params_;
  auto out = p.segment(p.layout().size() - 1);
  auto bias = out.last(action_dim());
  for (std::size_t k = 0; k < bias.size(); ++k) bias[k] += target[k] - avg[k];
  return with_params(std::move(p));
}

void GaussianPolicy::check_action(const Action& a) const {
  if (a.size() != action_dim())
    throw std::invalid_argument("GaussianPolicy: action has dimension " + std::to_string(a.size()) +
                                ", expected " + std::to_string(action_dim()));
}

std::vector<GaussianPolicy::Action> GaussianPolicy::sample(std::size_t s, std::size_t n,
                                                           Rng& rng) const {
  if (n == 0) throw std::invalid_argument("GaussianPolicy::sample: n must be >= 1");
  const Vec mu = mean(s);
  std::vector<Action> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec a = gaussian_sample(rng, mu.size(), sigma_);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += mu[k];
    out.push_back(std::move(a));
  }
  return out;
}

double GaussianPolicy::log_prob(std::size_t s, const Action& a) const {
  check_action(a);
  const Vec mu = mean(s);
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sq += (a[k] - mu[k]) * (a[k] - mu[k]);
  const auto d = static_cast<double>(a.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * sigma_ * sigma_) - sq / (2.0 * sigma_ * sigma_);
}

ParamVector GaussianPolicy::grad_log_prob(std::size_t s, const Action& a) const {
  ParamVector out = ParamVector::zeros(net_.layout());
  const double w = 1.0;
  accumulate_weighted_score(s, std::span<const Action>(&a, 1), std::span<const double>(&w, 1), out);
  return out;
}

void GaussianPolicy::accumulate_weighted_score(std::size_t s, std::span<const Action> actions,
                                               std::span<const double> weights,
                                               ParamVector& out) const {
  if (actions.size() != weights.size())
    throw std::invalid_argument("accumulate_weighted_score: actions/weights size mismatch");
  const MlpTrace trace = net_.forward_trace(params_, state(s));
  const Vec& mu = trace.result();
  Vec upstream(mu.size(), 0.0);
  bool any = false;
  const double inv_var = 1.0 / (sigma_ * sigma_);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    check_action(actions[i]);
    if (weights[i] == 0.0) continue;
    any = true;
    for (std::size_t k = 0; k < mu.size(); ++k)
      upstream[k] += weights[i] * (actions[i][k] - mu[k]) * inv_var;
  }
  if (any) net_.accumulate_backward(params_, trace, upstream, 1.0, out);
}

std::vector<ParamVector> GaussianPolicy::mean_jacobian(std::size_t s) const {
  const MlpTrace trace = net_.forward_trace(params_, state(s));
  std::vector<ParamVector> rows;
  for (std::size_t k = 0; k < action_dim(); ++k) {
    Vec e(action_dim(), 0.0);
    e[k] = 1.0;
    ParamVector row = ParamVector::zeros(net_.layout());
    net_.accumulate_backward(params_, trace, e, 1.0, row);
    rows.push_back(std::move(row));
  }
  return rows;
}

double kl_to_reference(const GaussianPolicy& policy, const ReferenceSnapshot& ref,
                       std::span<const std::size_t> states) {
  if (states.empty()) throw std::invalid_argument("kl_to_reference: no states");
  if (!ref.params().same_layout(policy.params()))
    throw std::invalid_argument("kl_to_reference: reference architecture differs from policy");
  const double var = policy.sigma() * policy.sigma();
  double total = 0.0;
  for (std::size_t s : states) {
    const Vec mu = policy.mean(s);
    const Vec mu_ref = policy.net().forward(ref.params(), policy.state(s));
    double sq = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) sq += (mu[k] - mu_ref[k]) * (mu[k] - mu_ref[k]);
    total += sq / (2.0 * var);
  }
  return total / static_cast<double>(states.size());
}

double kl_to_reference(const GaussianPolicy& policy, const ReferenceSnapshot& ref) {
  std::vector<std::size_t> all(policy.num_states());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return kl_to_reference(policy, ref, all);
}

}  // namespace hacklab
