#include "hacklab/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hacklab {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

// Largest Hessian-norm factor of a unit bump at scaled radius >= t. The
// radial eigenvalue is (t^2 - 1) e^{-t^2/2}, the tangential one e^{-t^2/2};
// the former peaks at t = sqrt(3).
double hessian_envelope(double t) {
  const double g = std::exp(-0.5 * t * t);
  if (t <= std::sqrt(3.0)) return std::max(g, 2.0 * std::exp(-1.5));
  return (t * t - 1.0) * g;
}

// Largest gradient-norm factor t e^{-t^2/2} at scaled radius >= t.
double gradient_envelope(double t) {
  if (t <= 1.0) return std::exp(-0.5);
  return t * std::exp(-0.5 * t * t);
}

}  // namespace

BumpLandscape::BumpLandscape(std::vector<Bump> bumps) : bumps_(std::move(bumps)) {
  if (bumps_.empty()) throw std::invalid_argument("BumpLandscape: need at least one bump");
  const std::size_t d = bumps_.front().center.size();
  if (d == 0) throw std::invalid_argument("BumpLandscape: zero-dimensional centers");
  for (const auto& b : bumps_) {
    if (b.center.size() != d) throw std::invalid_argument("BumpLandscape: center dimensions differ");
    if (!(b.width > 0.0) || !std::isfinite(b.width))
      throw std::invalid_argument("BumpLandscape: widths must be positive");
    if (!std::isfinite(b.height)) throw std::invalid_argument("BumpLandscape: non-finite height");
    for (double c : b.center)
      if (!std::isfinite(c)) throw std::invalid_argument("BumpLandscape: non-finite center");
  }
  // For a point a with nearest center c_k, every other center c_j satisfies
  // ||a - c_j|| >= ||c_j - c_k|| / 2, which bounds the neighbours' share.
  for (std::size_t k = 0; k < bumps_.size(); ++k) {
    double beta = bump_smoothness(k);
    double lip = bump_lipschitz(k);
    for (std::size_t j = 0; j < bumps_.size(); ++j) {
      if (j == k) continue;
      const double t = 0.5 * std::sqrt(sq_dist(bumps_[j].center, bumps_[k].center)) / bumps_[j].width;
      beta += bump_smoothness(j) * hessian_envelope(t);
      lip += std::abs(bumps_[j].height) / bumps_[j].width * gradient_envelope(t);
    }
    beta_ = std::max(beta_, beta);
    lipschitz_ = std::max(lipschitz_, lip);
  }
}

void BumpLandscape::check_dim(std::span<const double> a) const {
  if (a.size() != dim()) throw std::invalid_argument("BumpLandscape: action dimension mismatch");
}

double BumpLandscape::value(std::span<const double> a) const {
  check_dim(a);
  double r = 0.0;
  for (const auto& b : bumps_) r += b.height * std::exp(-sq_dist(a, b.center) / (2.0 * b.width * b.width));
  return r;
}

Vec BumpLandscape::gradient(std::span<const double> a) const {
  check_dim(a);
  Vec g(a.size(), 0.0);
  for (const auto& b : bumps_) {
    const double s2 = b.width * b.width;
    const double e = b.height * std::exp(-sq_dist(a, b.center) / (2.0 * s2));
    for (std::size_t k = 0; k < a.size(); ++k) g[k] -= e * (a[k] - b.center[k]) / s2;
  }
  return g;
}

double BumpLandscape::bump_smoothness(std::size_t i) const {
  const auto& b = bumps_.at(i);
  return std::abs(b.height) / (b.width * b.width);
}

double BumpLandscape::bump_lipschitz(std::size_t i) const {
  const auto& b = bumps_.at(i);
  return std::abs(b.height) / (b.width * std::exp(0.5));
}

std::size_t BumpLandscape::nearest_center(std::span<const double> a) const {
  check_dim(a);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bumps_.size(); ++i) {
    const double d = sq_dist(a, bumps_[i].center);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double BumpLandscape::expected_value(std::span<const double> mu, double sigma) const {
  check_dim(mu);
  if (!(sigma >= 0.0)) throw std::invalid_argument("expected_value: sigma must be >= 0");
  double r = 0.0;
  const auto d = static_cast<double>(dim());
  for (const auto& b : bumps_) {
    const double s2 = b.width * b.width;
    const double v = s2 + sigma * sigma;
    r += b.height * std::pow(s2 / v, 0.5 * d) * std::exp(-sq_dist(mu, b.center) / (2.0 * v));
  }
  return r;
}

BumpLandscape BumpLandscape::with_bump(Bump extra) const {
  auto bumps = bumps_;
  bumps.push_back(std::move(extra));
  return BumpLandscape(std::move(bumps));
}

BumpLandscape BumpLandscape::only(std::size_t i) const {
  return BumpLandscape({bumps_.at(i)});
}

BumpLandscape two_basin_benchmark(const TwoBasinParams& p) {
  if (p.dim == 0) throw std::invalid_argument("two_basin_benchmark: dim must be >= 1");
  if (!(p.sharp_width > 0.0) || !(p.flat_width > 0.0))
    throw std::invalid_argument("two_basin_benchmark: widths must be positive");
  if (!(p.sharp_width < p.flat_width))
    throw std::invalid_argument("two_basin_benchmark: sharp_width must be below flat_width");
  if (!(p.separation >= 3.0 * (p.sharp_width + p.flat_width)))
    throw std::invalid_argument("two_basin_benchmark: basins overlap (separation < 3 (s_sharp + s_flat))");
  Vec sharp(p.dim, 0.0), flat(p.dim, 0.0);
  sharp[0] = -0.5 * p.separation;
  flat[0] = 0.5 * p.separation;
  return BumpLandscape({{sharp, p.sharp_height, p.sharp_width}, {flat, p.flat_height, p.flat_width}});
}

}  // namespace hacklab
