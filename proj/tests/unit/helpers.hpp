#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "hacklab/param_vector.hpp"

namespace testutil {

// Central finite difference of f at every coordinate of p.
inline std::vector<double> central_difference(const std::function<double(const hacklab::ParamVector&)>& f,
                                              const hacklab::ParamVector& p, double h = 1e-5) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    hacklab::ParamVector up = p, down = p;
    up[i] += h;
    down[i] -= h;
    out[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return out;
}

// max_i |a_i - b_i| / max(|b_i|, floor); the floor keeps near-zero entries
// from dominating.
inline double max_rel_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
  return worst;
}

}  // namespace testutil

#include "hacklab/sequence_policy.hpp"

namespace testutil {

// Every valid token sequence for vocabulary V and horizon T: sequences end
// with the end token, or reach length T without it.
inline std::vector<hacklab::TokenSeq> enumerate_sequences(std::size_t V, std::size_t T) {
  std::vector<hacklab::TokenSeq> out;
  std::vector<hacklab::TokenSeq> open{{}};
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<hacklab::TokenSeq> next;
    for (const auto& prefix : open) {
      for (std::size_t v = 0; v < V; ++v) {
        auto s = prefix;
        s.push_back(static_cast<int>(v));
        if (v == static_cast<std::size_t>(hacklab::kEndToken) || t + 1 == T) {
          out.push_back(std::move(s));
        } else {
          next.push_back(std::move(s));
        }
      }
    }
    open = std::move(next);
  }
  return out;
}

}  // namespace testutil
