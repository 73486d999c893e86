#pragma once

#include <cstddef>

#include "hacklab/mlp.hpp"
#include "hacklab/sequence_policy.hpp"

namespace hacklab {

enum class FeatureMap {
  raw,            // action coordinates as-is
  bag_of_tokens,  // one-hot prompt followed by per-token counts
};

// R_theta(s, a) = f_theta(features(s, a)) with a scalar-output MLP.
class ProxyRewardModel {
 public:
  // For FeatureMap::raw, `width` is the action dimension and num_prompts
  // must be 0. For bag_of_tokens, `width` is the vocabulary size.
  ProxyRewardModel(Mlp net, ParamVector theta, FeatureMap map, std::size_t width,
                   std::size_t num_prompts = 0);

  static ProxyRewardModel make(FeatureMap map, std::size_t width, std::size_t num_prompts,
                               const std::vector<std::size_t>& hidden, Rng& rng);
  static std::size_t feature_width(FeatureMap map, std::size_t width, std::size_t num_prompts) {
    return map == FeatureMap::raw ? width : num_prompts + width;
  }

  const Mlp& net() const { return net_; }
  const ParamVector& params() const { return theta_; }
  void set_params(ParamVector theta);
  FeatureMap feature_map() const { return map_; }

  Vec features(std::size_t state, const Vec& action) const;
  Vec features(std::size_t state, const TokenSeq& action) const;

  double operator()(std::size_t state, const Vec& action) const;
  double operator()(std::size_t state, const TokenSeq& action) const;

  double score_features(std::span<const double> x) const;
  // out += scale * d R_theta / d theta at features x.
  void accumulate_grad(std::span<const double> x, double scale, ParamVector& out) const;

 private:
  Mlp net_;
  ParamVector theta_;
  FeatureMap map_;
  std::size_t width_;
  std::size_t num_prompts_;
};

}  // namespace hacklab
