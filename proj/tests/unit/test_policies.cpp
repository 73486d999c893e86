#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "hacklab/gaussian_policy.hpp"
#include "hacklab/sequence_policy.hpp"

using namespace hacklab;

namespace {

GaussianPolicy small_gaussian(std::uint64_t seed, double sigma = 0.3, std::size_t action_dim = 2) {
  Rng r(seed);
  std::vector<Vec> states;
  for (int s = 0; s < 3; ++s) states.push_back(gaussian_sample(r, 3, 1.0));
  return GaussianPolicy::make(states, {6, 6}, action_dim, sigma, r);
}

SequencePolicy small_sequence(std::uint64_t seed, std::size_t V = 3, std::size_t T = 3, std::size_t P = 2) {
  Rng r(seed);
  SequencePolicy pol = SequencePolicy::make(V, T, P, {8, 8}, r);
  ParamVector p = pol.params();
  for (double& v : p.values()) v *= 2.0;  // sharper than init, still smooth
  return pol.with_params(p);
}

// Policy whose logits are a fixed function of nothing but the output bias.
SequencePolicy bias_only(std::size_t V, std::size_t T, const Vec& logits) {
  Rng r(0);
  SequencePolicy pol = SequencePolicy::make(V, T, 1, {4, 4}, r);
  ParamVector p = ParamVector::zeros_like(pol.params());
  auto out = p.segment(p.layout().size() - 1);
  for (std::size_t k = 0; k < V; ++k) out[out.size() - V + k] = logits[k];
  return pol.with_params(p);
}

}  // namespace

TEST_SUITE("policies") {
  TEST_CASE("gaussian sampling with tiny sigma stays at the mean") {
    const GaussianPolicy pol = small_gaussian(1, 1e-6);
    Rng r(4);
    const Vec mu = pol.mean(1);
    for (const auto& a : pol.sample(1, 100, r))
      for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - mu[k]) <= 1e-4);
    CHECK(pol.sample(0, 8, r).size() == 8);
    CHECK_THROWS_AS(pol.sample(0, 0, r), std::invalid_argument);
  }

  TEST_CASE("gaussian log density at the mean") {
    const GaussianPolicy pol = small_gaussian(2, 1.0, 3);
    CHECK(pol.log_prob(0, pol.mean(0)) == doctest::Approx(-1.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK_THROWS_AS(pol.log_prob(0, Vec{1.0}), std::invalid_argument);
  }

  TEST_CASE("gaussian grad_log_prob: FD oracle and closed form") {
    Rng r(9);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
      const GaussianPolicy pol = small_gaussian(100 + c, 0.3 + 0.5 * r.uniform());
      const std::size_t s = r.uniform_index(pol.num_states());
      const Vec a = pol.sample(s, 1, r).front();
      const ParamVector g = pol.grad_log_prob(s, a);
      const auto f = [&](const ParamVector& q) { return pol.with_params(q).log_prob(s, a); };
      worst = std::max(worst, testutil::max_rel_error(g.values(), testutil::central_difference(f, pol.params())));

      Vec up(a.size());
      const Vec mu = pol.mean(s);
      for (std::size_t k = 0; k < a.size(); ++k) up[k] = (a[k] - mu[k]) / (pol.sigma() * pol.sigma());
      const ParamVector closed = pol.net().backward(pol.params(), pol.state(s), up);
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(closed[i]).epsilon(1e-12));
    }
    CHECK(worst <= 1e-4);
  }

  TEST_CASE("sequence step probabilities normalize") {
    const SequencePolicy pol = small_sequence(3, 16, 8, 4);
    for (std::size_t s = 0; s < 4; ++s) {
      for (int prev : {-1, 0, 5, 15}) {
        for (std::size_t pos : {0u, 3u, 7u}) {
          double total = 0.0;
          for (double lp : pol.step_log_probs(s, prev, pos)) total += std::exp(lp);
          CHECK(std::abs(total - 1.0) <= 1e-9);
        }
      }
    }
  }

  TEST_CASE("sequence mass sums to one by enumeration (V=3, T=3)") {
    const SequencePolicy pol = small_sequence(4);
    for (std::size_t s = 0; s < 2; ++s) {
      double total = 0.0;
      for (const auto& seq : testutil::enumerate_sequences(3, 3)) total += std::exp(pol.log_prob(s, seq));
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }

  TEST_CASE("uniform logits give log(1/V) per token") {
    const SequencePolicy pol = bias_only(4, 4, {0, 0, 0, 0});
    CHECK(pol.log_prob(0, TokenSeq{2, 0}) == doctest::Approx(2.0 * std::log(0.25)).epsilon(1e-14));
  }

  TEST_CASE("one-hot logits sample the argmax") {
    const SequencePolicy pol = bias_only(4, 1, {0, 0, 50, 0});
    Rng r(8);
    int hits = 0;
    for (const auto& a : pol.sample(0, 10000, r)) hits += a.front() == 2;
    CHECK(hits >= 9990);
  }

  TEST_CASE("sequence validity checks") {
    const SequencePolicy pol = small_sequence(5, 4, 3, 1);
    CHECK_THROWS_AS(pol.log_prob(0, TokenSeq{4}), std::invalid_argument);
    CHECK_THROWS_AS(pol.log_prob(0, TokenSeq{-1}), std::invalid_argument);
    CHECK_THROWS_AS(pol.log_prob(0, TokenSeq{0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(pol.log_prob(0, TokenSeq{1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(pol.log_prob(0, TokenSeq{}), std::invalid_argument);
    CHECK_THROWS_AS(pol.log_prob(1, TokenSeq{0}), std::invalid_argument);
    Rng r(1);
    for (const auto& a : pol.sample(0, 200, r)) CHECK_NOTHROW(pol.check_action(a));
  }

  TEST_CASE("sequence grad_log_prob matches central differences") {
    Rng r(12);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
      const SequencePolicy pol = small_sequence(200 + c, 5, 4, 2);
      const std::size_t s = r.uniform_index(2);
      const TokenSeq a = pol.sample(s, 1, r).front();
      const ParamVector g = pol.grad_log_prob(s, a);
      const auto f = [&](const ParamVector& q) { return pol.with_params(q).log_prob(s, a); };
      worst = std::max(worst, testutil::max_rel_error(g.values(), testutil::central_difference(f, pol.params())));
    }
    CHECK(worst <= 1e-4);
  }

  TEST_CASE("score function has mean zero") {
    SUBCASE("gaussian") {
      const GaussianPolicy pol = small_gaussian(21);
      Rng r(22);
      const std::size_t n = 100000;
      const auto actions = pol.sample(0, n, r);
      ParamVector sum = ParamVector::zeros_like(pol.params());
      ParamVector sq = ParamVector::zeros_like(pol.params());
      for (const auto& a : actions) {
        const ParamVector g = pol.grad_log_prob(0, a);
        sum += g;
        for (std::size_t i = 0; i < g.size(); ++i) sq[i] += g[i] * g[i];
      }
      // ||mean|| versus its standard error sqrt(sum_i Var_i / n).
      double mean_sq = 0.0, var_sum = 0.0;
      const double dn = static_cast<double>(n);
      for (std::size_t i = 0; i < sum.size(); ++i) {
        const double m = sum[i] / dn;
        mean_sq += m * m;
        var_sum += (sq[i] / dn - m * m) / dn;
      }
      CHECK(std::sqrt(mean_sq) <= 3.0 * std::sqrt(var_sum));
    }
    SUBCASE("sequence, exact by enumeration") {
      const SequencePolicy pol = small_sequence(23);
      ParamVector total = ParamVector::zeros_like(pol.params());
      for (const auto& seq : testutil::enumerate_sequences(3, 3))
        total.axpy(std::exp(pol.log_prob(1, seq)), pol.grad_log_prob(1, seq));
      CHECK(l2_norm(total) <= 1e-9);
    }
  }

  TEST_CASE("gaussian KL closed form") {
    const GaussianPolicy pol = small_gaussian(31);
    CHECK(kl_to_reference(pol, snapshot(pol, 0)) == 0.0);

    Rng r(0);
    GaussianPolicy unit = GaussianPolicy::make({Vec{1.0}}, {3, 3}, 1, 1.0, r);
    const GaussianPolicy at0 = unit.recentered(Vec{0.0});
    const GaussianPolicy at2 = unit.recentered(Vec{2.0});
    CHECK(kl_to_reference(at2, snapshot(at0, 0)) == doctest::Approx(2.0).epsilon(1e-12));

    Rng r2(1);
    const GaussianPolicy other = GaussianPolicy::make({Vec{1.0}}, {3, 4}, 1, 1.0, r2);
    CHECK_THROWS_AS(kl_to_reference(at0, snapshot(other, 0)), std::invalid_argument);
  }

  TEST_CASE("sequence KL: self is zero, MC agrees with enumeration") {
    const SequencePolicy pol = small_sequence(41);
    const std::vector<std::size_t> states{0, 1};
    Rng r(42);
    const Estimate self = kl_to_reference(pol, snapshot(pol, 0), states, r, 500);
    CHECK(std::abs(self.value) <= 3.0 * self.se + 1e-15);

    const SequencePolicy ref = small_sequence(43);
    const ReferenceSnapshot snap = snapshot(ref, 0);
    double exact = 0.0;
    for (std::size_t s : states)
      for (const auto& seq : testutil::enumerate_sequences(3, 3)) {
        const double lp = pol.log_prob(s, seq);
        exact += std::exp(lp) * (lp - ref.log_prob(s, seq)) / 2.0;
      }
    const Estimate mc = kl_to_reference(pol, snap, states, r, 20000);
    CHECK(exact > 0.0);
    CHECK(std::abs(mc.value - exact) <= 3.0 * mc.se);
  }

  TEST_CASE("hamming distance pads with end tokens") {
    CHECK(hamming_distance(TokenSeq{1, 2, 0}, TokenSeq{1, 2, 0}) == 0);
    CHECK(hamming_distance(TokenSeq{1, 2, 0}, TokenSeq{1, 3, 0}) == 1);
    CHECK(hamming_distance(TokenSeq{1, 0}, TokenSeq{1, 2, 3}) == 2);
  }
}
