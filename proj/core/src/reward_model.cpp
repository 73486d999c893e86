#include "hacklab/reward_model.hpp"

#include <stdexcept>

namespace hacklab {

ProxyRewardModel::ProxyRewardModel(Mlp net, ParamVector theta, FeatureMap map, std::size_t width,
                                   std::size_t num_prompts)
    : net_(std::move(net)), map_(map), width_(width), num_prompts_(num_prompts) {
  if (width_ == 0) throw std::invalid_argument("ProxyRewardModel: zero feature width");
  if (map_ == FeatureMap::raw && num_prompts_ != 0)
    throw std::invalid_argument("ProxyRewardModel: raw features take no prompt slots");
  if (net_.spec().input_width() != feature_width(map_, width_, num_prompts_))
    throw std::invalid_argument("ProxyRewardModel: network input width does not match features");
  if (net_.spec().output_width() != 1)
    throw std::invalid_argument("ProxyRewardModel: network must have a scalar output");
  set_params(std::move(theta));
}

ProxyRewardModel ProxyRewardModel::make(FeatureMap map, std::size_t width, std::size_t num_prompts,
                                        const std::vector<std::size_t>& hidden, Rng& rng) {
  std::vector<std::size_t> widths{feature_width(map, width, num_prompts)};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  Mlp net(MlpSpec::standard(widths));
  ParamVector theta = net.init_params(rng);
  return ProxyRewardModel(std::move(net), std::move(theta), map, width, num_prompts);
}

void ProxyRewardModel::set_params(ParamVector theta) {
  if (theta.size() != net_.num_params() || !(theta.layout() == *net_.layout()))
    throw std::invalid_argument("ProxyRewardModel: parameter layout does not match network");
  theta_ = std::move(theta);
}

Vec ProxyRewardModel::features(std::size_t, const Vec& action) const {
  if (map_ != FeatureMap::raw)
    throw std::invalid_argument("ProxyRewardModel: continuous action given to a token model");
  if (action.size() != width_) throw std::invalid_argument("ProxyRewardModel: action dimension mismatch");
  return action;
}

Vec ProxyRewardModel::features(std::size_t state, const TokenSeq& action) const {
  if (map_ != FeatureMap::bag_of_tokens)
    throw std::invalid_argument("ProxyRewardModel: token action given to a coordinate model");
  if (state >= num_prompts_) throw std::invalid_argument("ProxyRewardModel: prompt out of range");
  Vec x(num_prompts_ + width_, 0.0);
  x[state] = 1.0;
  for (int t : action) {
    if (t < 0 || static_cast<std::size_t>(t) >= width_)
      throw std::invalid_argument("ProxyRewardModel: token out of vocabulary");
    x[num_prompts_ + static_cast<std::size_t>(t)] += 1.0;
  }
  return x;
}

double ProxyRewardModel::score_features(std::span<const double> x) const {
  return net_.forward(theta_, x)[0];
}

double ProxyRewardModel::operator()(std::size_t state, const Vec& action) const {
  return score_features(features(state, action));
}

double ProxyRewardModel::operator()(std::size_t state, const TokenSeq& action) const {
  return score_features(features(state, action));
}

void ProxyRewardModel::accumulate_grad(std::span<const double> x, double scale, ParamVector& out) const {
  const MlpTrace trace = net_.forward_trace(theta_, x);
  const double one = 1.0;
  net_.accumulate_backward(theta_, trace, std::span<const double>(&one, 1), scale, out);
}

}  // namespace hacklab
