#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hacklab/numeric.hpp"

namespace hacklab {

struct Bump {
  Vec center;
  double height = 0.0;
  double width = 1.0;
};

// R(a) = sum_i h_i exp(-||a - c_i||^2 / (2 s_i^2)).
class BumpLandscape {
 public:
  explicit BumpLandscape(std::vector<Bump> bumps);

  std::size_t dim() const { return bumps_.front().center.size(); }
  const std::vector<Bump>& bumps() const { return bumps_; }

  double value(std::span<const double> a) const;
  Vec gradient(std::span<const double> a) const;

  // Per-bump constants: |h|/s^2 bounds the Hessian norm and |h|/(s sqrt(e))
  // the gradient norm of a lone bump.
  double bump_smoothness(std::size_t i) const;
  double bump_lipschitz(std::size_t i) const;

  // Global constants valid for the whole sum, including the tails of
  // neighbouring bumps. For well-separated bumps these approach the largest
  // per-bump constant.
  double smoothness() const { return beta_; }
  double lipschitz() const { return lipschitz_; }

  // Index of the bump whose center is closest to a.
  std::size_t nearest_center(std::span<const double> a) const;

  // E[R(mu + Z)] with Z ~ N(0, sigma^2 I), in closed form.
  double expected_value(std::span<const double> mu, double sigma) const;

  BumpLandscape with_bump(Bump extra) const;
  // Keeps only bump i.
  BumpLandscape only(std::size_t i) const;

 private:
  void check_dim(std::span<const double> a) const;

  std::vector<Bump> bumps_;
  double beta_ = 0.0;
  double lipschitz_ = 0.0;
};

inline constexpr std::size_t kSharpBasin = 0;
inline constexpr std::size_t kFlatBasin = 1;

struct TwoBasinParams {
  double sharp_height = 1.25;
  double sharp_width = 0.15;
  double flat_height = 1.0;
  double flat_width = 0.8;
  double separation = 4.0;
  std::size_t dim = 2;
};

// Sharp bump at (-separation/2, 0, ...), flat bump at (+separation/2, 0, ...).
// Bump kSharpBasin is the sharp one, kFlatBasin the flat one.
BumpLandscape two_basin_benchmark(const TwoBasinParams& p = {});

}  // namespace hacklab
