#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "hacklab/mlp.hpp"

using namespace hacklab;

namespace {

Mlp identity_net(std::size_t w) {
  MlpSpec spec;
  spec.widths = {w, w, w, w};
  spec.activations = {Activation::identity, Activation::identity, Activation::identity};
  spec.roles = {LayerRole::input_embedding, LayerRole::hidden, LayerRole::output_head};
  return Mlp(spec);
}

}  // namespace

TEST_SUITE("nets") {
  TEST_CASE("spec validation") {
    CHECK_THROWS_AS(MlpSpec::standard({3, 2}), std::invalid_argument);
    CHECK_THROWS_AS(MlpSpec::standard({3, 0, 2}), std::invalid_argument);
    MlpSpec bad = MlpSpec::standard({2, 4, 4, 1});
    bad.roles[1] = LayerRole::output_head;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    const MlpSpec ok = MlpSpec::standard({2, 4, 4, 1});
    CHECK(ok.activations.back() == Activation::identity);
    CHECK(ok.roles.front() == LayerRole::input_embedding);
    CHECK(ok.roles[1] == LayerRole::hidden);
  }

  TEST_CASE("identity weights reproduce the input") {
    const Mlp net = identity_net(3);
    ParamVector p = ParamVector::zeros(net.layout());
    for (std::size_t l = 0; l < 3; ++l) {
      auto seg = p.segment(l);
      for (std::size_t i = 0; i < 3; ++i) seg[i * 3 + i] = 1.0;
    }
    const Vec x{0.5, -2.0, 7.25};
    CHECK(net.forward(p, x) == x);
  }

  TEST_CASE("zero parameters give zero output; repeated calls are bit-identical") {
    const Mlp net(MlpSpec::standard({4, 8, 8, 3}));
    const ParamVector zero = ParamVector::zeros(net.layout());
    for (double v : net.forward(zero, Vec{1, 2, 3, 4})) CHECK(v == 0.0);
    Rng r(2);
    const ParamVector p = net.init_params(r);
    const Vec x{0.1, -0.3, 0.2, 0.9};
    CHECK(net.forward(p, x) == net.forward(p, x));
    CHECK_THROWS_AS(net.forward(p, Vec{1, 2}), std::invalid_argument);
  }

  TEST_CASE("initialization scale and zero biases") {
    const Mlp net(MlpSpec::standard({64, 64, 64, 1}));
    Rng r(11);
    const ParamVector p = net.init_params(r);
    const auto seg = p.segment(1);
    double ss = 0.0;
    for (std::size_t i = 0; i < 64 * 64; ++i) ss += seg[i] * seg[i];
    CHECK(ss / (64.0 * 64.0) == doctest::Approx(1.0 / 64.0).epsilon(0.1));
    for (std::size_t i = 64 * 64; i < seg.size(); ++i) CHECK(seg[i] == 0.0);
  }

  TEST_CASE("backward matches central differences on 100 random cases") {
    Rng r(42);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
      const std::size_t in = 1 + r.uniform_index(5), h1 = 2 + r.uniform_index(6), h2 = 2 + r.uniform_index(6),
                        out = 1 + r.uniform_index(4);
      const Mlp net(MlpSpec::standard({in, h1, h2, out}));
      ParamVector p = net.init_params(r);
      for (double& v : p.values()) v += 0.1 * r.normal();  // nonzero biases too
      const Vec x = gaussian_sample(r, in, 1.0);
      const Vec up = gaussian_sample(r, out, 1.0);
      const ParamVector g = net.backward(p, x, up);
      const auto f = [&](const ParamVector& q) { return dot(up, net.forward(q, x)); };
      const auto fd = testutil::central_difference(f, p);
      worst = std::max(worst, testutil::max_rel_error(g.values(), fd));
    }
    CHECK(worst <= 1e-4);
  }

  TEST_CASE("backward is linear in the upstream gradient") {
    const Mlp net(MlpSpec::standard({3, 5, 5, 2}));
    Rng r(3);
    const ParamVector p = net.init_params(r);
    const Vec x{0.2, -0.1, 0.4};
    const ParamVector zero = net.backward(p, x, Vec{0.0, 0.0});
    for (double v : zero.values()) CHECK(v == 0.0);
    const ParamVector g1 = net.backward(p, x, Vec{1.0, -2.0});
    const ParamVector g3 = net.backward(p, x, Vec{3.0, -6.0});
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g3[i] == doctest::Approx(3.0 * g1[i]).epsilon(1e-12));
    CHECK_THROWS_AS(net.backward(p, x, Vec{1.0}), std::invalid_argument);
  }

  TEST_CASE("perturb respects the mask") {
    const Mlp net(MlpSpec::standard({3, 4, 4, 2}));
    Rng r(5);
    const ParamVector p = net.init_params(r);
    ParamVector d = ParamVector::zeros(net.layout());
    for (double& v : d.values()) v = r.normal();

    const PerturbMask hidden = PerturbMask::hidden_only(net.spec());
    CHECK_FALSE(hidden.perturbable(0));
    CHECK(hidden.perturbable(1));
    CHECK_FALSE(hidden.perturbable(2));
    CHECK(perturb(p, d, 0.0, hidden) == p);

    const ParamVector q = perturb(p, d, 1e-3, hidden);
    for (std::size_t l : {0u, 2u}) {
      const auto a = p.segment(l), b = q.segment(l);
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
    const auto a = p.segment(1);
    const auto b = q.segment(1);
    const auto dir = d.segment(1);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == a[i] + 1e-3 * dir[i]);

    const PerturbMask all = PerturbMask::all_layers(net.spec());
    const ParamVector full = perturb(p, d, 1e-3, all);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(full[i] == p[i] + 1e-3 * d[i]);
    const ParamVector back = perturb(full, d, -1e-3, all);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(back[i] - p[i]) <= 1e-12);

    const Mlp other(MlpSpec::standard({3, 5, 4, 2}));
    CHECK_THROWS_AS(perturb(p, ParamVector::zeros(other.layout()), 1.0, all), std::invalid_argument);
    CHECK_THROWS_AS(PerturbMask(std::vector<bool>{false, false}), std::invalid_argument);
  }
}
