#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "hacklab/bandit.hpp"
#include "hacklab/chi.hpp"
#include "hacklab/diagnostics.hpp"

using namespace hacklab;

namespace {

GaussianPolicy centered(const Vec& center, double sigma, std::uint64_t seed = 1) {
  Rng r(seed);
  return GaussianPolicy::make({Vec{1.0, -0.5}}, {8, 8}, center.size(), sigma, r).recentered(center);
}

Vec basin_center(std::size_t which) {
  return two_basin_benchmark().bumps()[which].center;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("chi distribution against closed forms and sampling") {
    // d = 2: P(||Z|| > r) = exp(-r^2 / 2 sigma^2); d = 1: erfc.
    for (double r : {0.1, 0.5, 1.3, 4.0}) {
      CHECK(chi_tail(2, r, 0.7) == doctest::Approx(std::exp(-r * r / (2 * 0.49))).epsilon(1e-10));
      CHECK(chi_tail(1, r, 0.7) == doctest::Approx(std::erfc(r / (0.7 * std::sqrt(2.0)))).epsilon(1e-10));
    }
    CHECK(chi_tail(3, 0.0, 1.0) == 1.0);
    CHECK(chi_mean(1, 2.0) == doctest::Approx(2.0 * std::sqrt(2.0 / M_PI)).epsilon(1e-12));

    Rng rng(3);
    const std::size_t n = 100000;
    for (std::size_t d : {2u, 5u, 12u}) {
      const double sigma = 0.3, r = 0.3 * std::sqrt(static_cast<double>(d));
      std::vector<double> norms(n), tail(n);
      for (std::size_t i = 0; i < n; ++i) {
        norms[i] = l2_norm(gaussian_sample(rng, d, sigma));
        tail[i] = norms[i] > r ? 1.0 : 0.0;
      }
      const Estimate m = mean_and_se(norms), t = mean_and_se(tail);
      CHECK(std::abs(m.value - chi_mean(d, sigma)) <= 3 * m.se);
      CHECK(std::abs(t.value - chi_tail(d, r, sigma)) <= 3 * t.se);
    }
  }

  TEST_CASE("sharpness probe on quadratic stubs") {
    const auto layout = make_layout({{"layer0", 0, 3}, {"layer1", 3, 3}});
    const ParamVector phi = ParamVector::zeros(layout);
    const PerturbMask all(std::vector<bool>{true, true});
    Rng rng(4);
    const auto quad = [](double lambda) {
      return [lambda](const ParamVector& p) { return -0.5 * lambda * dot(p.values(), p.values()); };
    };
    CHECK(sharpness_probe_objective(quad(3.0), phi, all, 32, 0.0, rng) == 0.0);
    CHECK(sharpness_probe_objective(quad(3.0), phi, all, 32, 0.1, rng) == doctest::Approx(0.5 * 3.0 * 0.01));

    double prev = -1.0;
    for (double lambda : {0.5, 1.0, 2.0, 4.0}) {
      std::vector<double> reps;
      for (int i = 0; i < 50; ++i) reps.push_back(sharpness_probe_objective(quad(lambda), phi, all, 8, 0.1, rng));
      const double med = median(reps);
      CHECK(med > prev);
      prev = med;
    }
    CHECK_THROWS_AS(sharpness_probe_objective(quad(1.0), phi, all, 0, 0.1, rng), std::invalid_argument);
  }

  TEST_CASE("sharpness probe separates the basins") {
    const BumpLandscape land = two_basin_benchmark();
    const auto proxy = [&](std::size_t, const Vec& a) { return land.value(a); };
    const auto shifted = [&](std::size_t, const Vec& a) { return land.value(a) + 7.0; };
    const std::vector<std::size_t> states{0};
    const GaussianPolicy sharp = centered(basin_center(kSharpBasin), 0.1);
    const GaussianPolicy flat = centered(basin_center(kFlatBasin), 0.1);
    const PerturbMask mask = PerturbMask::hidden_only(sharp.net().spec());
    SharpnessOptions opt;
    opt.rollouts = 64;
    Rng r1(5), r2(5), r3(5);
    const double ps = sharpness_probe(sharp, proxy, std::span(states), mask, opt, r1);
    const double pf = sharpness_probe(flat, proxy, std::span(states), mask, opt, r2);
    CHECK(ps >= 5.0 * pf);
    CHECK(sharpness_probe(sharp, shifted, std::span(states), mask, opt, r3) == doctest::Approx(ps).epsilon(1e-6));
    opt.probe_scale = 0.0;
    CHECK(sharpness_probe(sharp, proxy, std::span(states), mask, opt, r1) == 0.0);
  }

  TEST_CASE("violation rate") {
    const BumpLandscape land = two_basin_benchmark();
    const GaussianPolicy pol = centered(basin_center(kSharpBasin), 0.3);
    Rng rng(6);
    const auto constant = [](std::size_t, const Vec&) { return 2.0; };
    CHECK(violation_rate(pol, constant, 0.1, 1.0, 1000, rng).value == 0.0);
    const auto reward = [&](std::size_t, const Vec& a) { return land.value(a); };
    CHECK(violation_rate(pol, reward, 1.25, 10.0, 5000, rng).value == 0.0);
    CHECK_THROWS_AS(violation_rate(pol, reward, 0.0, 1.0, 1000, rng), std::invalid_argument);
    CHECK_THROWS_AS(violation_rate(pol, reward, 1.0, 1.0, 999, rng), std::invalid_argument);

    const auto pairs = sample_action_pairs(pol, 20000, rng);
    const std::span<const ActionPair<Vec>> ps(pairs);
    double last = 1.0;
    for (double K : {0.01, 0.05, 0.1, 0.3, 0.6}) {
      const double v = violation_fraction(ps, reward, K, 0.3).value;
      CHECK(v <= last);
      last = v;
    }
    last = 0.0;
    for (double delta : {0.05, 0.1, 0.3, 1.0}) {
      const double v = violation_fraction(ps, reward, 0.1, delta).value;
      CHECK(v >= last);
      last = v;
    }
  }

  TEST_CASE("sharp basin violates more often than the flat one") {
    const BumpLandscape land = two_basin_benchmark();
    // K / delta = 2 sits between the flat (~0.76) and sharp (~5.05) Lipschitz constants.
    CHECK(land.bump_lipschitz(kFlatBasin) < 2.0);
    CHECK(land.bump_lipschitz(kSharpBasin) > 2.0);
    const auto reward = [&](std::size_t, const Vec& a) { return land.value(a); };
    Rng rng(7);
    const Estimate s = violation_rate(centered(basin_center(kSharpBasin), 0.3), reward, 0.1, 0.05, 100000, rng);
    const Estimate f = violation_rate(centered(basin_center(kFlatBasin), 0.3), reward, 0.1, 0.05, 100000, rng);
    CHECK(s.value - f.value > 3.0 * std::hypot(s.se, f.se));
  }

  TEST_CASE("pairwise bound") {
    const BumpLandscape land = two_basin_benchmark();
    Rng rng(8);
    const BoundReport flat = check_pairwise_bound(land, centered(basin_center(kFlatBasin), 0.3), 0.5, 0.05, 100000, rng);
    CHECK_FALSE(flat.vacuous());
    CHECK(flat.satisfied());
    const BoundReport tiny = check_pairwise_bound(land, centered(basin_center(kSharpBasin), 1e-4), 0.5, 0.05, 1000, rng);
    CHECK(tiny.lhs() == 0.0);
    CHECK(tiny.rhs() <= 1e-12);
    CHECK(tiny.satisfied());
    Vec off = basin_center(kSharpBasin);
    off[0] += 0.15;
    const BoundReport vac = check_pairwise_bound(land, centered(off, 0.3), 0.01, 0.05, 1000, rng);
    CHECK(vac.vacuous());
    CHECK(vac.passes());
  }

  TEST_CASE("gradient bound") {
    const BumpLandscape land = two_basin_benchmark();
    Rng rng(9);
    const GaussianPolicy at = centered(basin_center(kFlatBasin), 0.3);
    const BoundReport r0 = check_gradient_bound(land, at, 0.1, 200, rng);
    CHECK(r0.lhs() <= 1e-3);
    CHECK(r0.satisfied());

    Vec off = basin_center(kFlatBasin);
    off[0] += 0.1 * 0.8;
    const GaussianPolicy pol = centered(off, 0.3);
    for (LhatMode mode : {LhatMode::monte_carlo, LhatMode::analytic}) {
      GradientBoundOptions opt;
      opt.mode = mode;
      const BoundReport r = check_gradient_bound(land, pol, 0.1, 1000, rng, opt);
      CHECK(r.lhs() > 0.0);
      CHECK(r.satisfied());
    }

    GradientBoundOptions opt;
    opt.mode = LhatMode::analytic;
    Rng a(10), b(10);
    const BoundReport big = check_gradient_bound(land, pol, 0.1, 500, a, opt);
    const BoundReport small = check_gradient_bound(land, pol, 0.01, 500, b, opt);
    CHECK(small.inputs().at("D_star") == doctest::Approx(big.inputs().at("D_star") / 10.0));
    // Same draws scaled down lie in the smaller ball; the max drop cannot grow.
    CHECK(small.inputs().at("L_hat") <= big.inputs().at("L_hat"));
    CHECK_THROWS_AS(check_gradient_bound(land, pol, 0.0, 10, rng), std::invalid_argument);
  }

  TEST_CASE("BT excess-loss lower bound") {
    CHECK(2.0 * std::pow(sigmoid(2.0) - sigmoid(0.5), 2) == doctest::Approx(0.1334).epsilon(1e-3));

    const BumpLandscape gold({Bump{Vec{0.0}, 1.0, 1.0}});
    const double L = gold.lipschitz();
    CHECK(L == doctest::Approx(std::exp(-0.5)));
    const double K = 2.0, delta = 0.5 / L;
    const Vec spike{0.5};
    const BumpLandscape proxy = gold.with_bump(Bump{spike, 2.0 * K, delta / 4.0});
    Rng rng(11);
    const GaussianPolicy pol = centered(spike, 0.3);

    const BoundReport same = check_bt_lower_bound(gold, gold, pol, K, delta, 20000, rng);
    CHECK(same.lhs() == 0.0);
    CHECK(same.rhs() == 0.0);
    CHECK(same.satisfied());

    const BoundReport r = check_bt_lower_bound(gold, proxy, pol, K, delta, 100000, rng);
    CHECK(r.inputs().at("coefficient") == doctest::Approx(0.1334).epsilon(1e-3));
    CHECK(r.lhs() > 0.0);
    CHECK(r.inputs().at("violation_rate") > 0.0);
    CHECK(r.satisfied());
    CHECK_THROWS_AS(check_bt_lower_bound(gold, proxy, pol, 0.4, delta, 100, rng), std::invalid_argument);
  }

  TEST_CASE("reset asymptotics") {
    const Vec pi = reset_closed_form(Vec{0.5, 0.5}, Vec{1.0, 0.0}, 1.0, 2);
    CHECK(pi[0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
    CHECK(pi[0] == doctest::Approx(0.8808).epsilon(1e-4));
    const BoundReport two = check_reset_asymptotics(Vec{0.0, 0.0}, Vec{1.0, 0.0}, 1.0, 2, 10000);
    CHECK(two.satisfied());
    CHECK(two.lhs() <= 1e-3);

    Rng rng(12);
    for (std::size_t m : {2u, 10u}) {
      const Vec logits = gaussian_sample(rng, m, 1.0);
      const Vec rewards = gaussian_sample(rng, m, 1.0);
      for (std::size_t k : {1u, 2u, 4u}) {
        const ResetRun run = run_reset_stages(logits, rewards, 0.5, k, 10000);
        CHECK(run.converged);
        CHECK(run.tv <= 1e-3);
      }
      const ResetRun inf = run_reset_stages(logits, rewards, INFINITY, 4, 10000);
      CHECK(total_variation(inf.iterative, softmax(logits)) <= 1e-3);
      CHECK(inf.tv <= 1e-3);
    }
    const ResetRun cut = run_reset_stages(Vec{0.0, 0.0, 0.0}, Vec{3.0, 0.0, -1.0}, 0.1, 2, 2);
    CHECK_FALSE(cut.converged);
  }

  TEST_CASE("correlate") {
    std::vector<double> a, neg;
    for (int i = 0; i < 20; ++i) {
      a.push_back(std::sin(0.3 * i) + 0.1 * i);
      neg.push_back(-a.back());
    }
    CHECK(correlate(a, a) == doctest::Approx(1.0));
    CHECK(correlate(a, neg) == doctest::Approx(-1.0));
    const std::vector<double> flat(20, 1.0);
    CHECK_THROWS_AS(correlate(a, flat), std::domain_error);
    CHECK_THROWS_AS(correlate(std::span(a).first(5), std::span(neg).first(5)), std::invalid_argument);
    CHECK_THROWS_AS(correlate(std::span(a).first(12), std::span(neg).first(11)), std::invalid_argument);
  }
}
