#include <cmath>
#include <cstring>
#include <stdexcept>

#include "doctest.h"
#include "hacklab/numeric.hpp"
#include "hacklab/param_vector.hpp"
#include "hacklab/rng.hpp"

using namespace hacklab;

namespace {
ParamVector two_segment(std::vector<double> v) {
  const std::size_t n = v.size();
  return ParamVector(make_layout({{"a", 0, n / 2}, {"b", n / 2, n - n / 2}}), std::move(v));
}
}  // namespace

TEST_SUITE("core") {
  TEST_CASE("rng replays bit-identically and children are independent") {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(a.position() == 100);
    Rng c = a.child(1), d = a.child(2);
    CHECK(a.position() == 100);
    CHECK(c.next_u64() != d.next_u64());
    CHECK(Rng(1).next_u64() != Rng(2).next_u64());
  }

  TEST_CASE("uniform and normal draws") {
    Rng r(3);
    for (int i = 0; i < 1000; ++i) {
      const double u = r.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
    const auto before = r.position();
    (void)r.normal();
    CHECK(r.position() == before + 2);
    for (int i = 0; i < 1000; ++i) CHECK(r.uniform_index(7) < 7);
    CHECK_THROWS_AS(r.uniform_index(0), std::invalid_argument);
  }

  TEST_CASE("gaussian_sample moments at n = 1e6") {
    Rng r(0);
    const Vec x = gaussian_sample(r, 1000000, 1.0);
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - m) * (v - m);
    var /= static_cast<double>(x.size() - 1);
    CHECK(std::abs(m) <= 0.01);
    CHECK(var >= 0.99);
    CHECK(var <= 1.01);
  }

  TEST_CASE("gaussian_sample preconditions and determinism") {
    Rng r(1);
    CHECK_THROWS_AS(gaussian_sample(r, 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_sample(r, 3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_sample(r, 3, -1.0), std::invalid_argument);
    Rng a(7), b(7);
    const Vec x = gaussian_sample(a, 5, 2.0);
    const Vec y = gaussian_sample(b, 5, 2.0);
    CHECK(std::memcmp(x.data(), y.data(), 5 * sizeof(double)) == 0);
  }

  TEST_CASE("l2_norm") {
    CHECK(l2_norm(Vec{3, 4}) == 5.0);
    CHECK(l2_norm(Vec{0, 0, 0}) == 0.0);
    CHECK(l2_norm(Vec{1, 1, 1, 1}) == 2.0);
    Rng r(5);
    const Vec v = gaussian_sample(r, 1000, 3.0);
    double ss = 0.0;
    for (double x : v) ss += x * x;
    const double n = l2_norm(v);
    CHECK(std::abs(n * n - ss) <= 1e-12 * ss);
    CHECK_THROWS_AS(l2_norm(Vec{1.0, NAN}), std::invalid_argument);
    CHECK_THROWS_AS(l2_norm(Vec{INFINITY}), std::invalid_argument);
  }

  TEST_CASE("clip_by_global_norm") {
    ParamVector g = two_segment({12, 16, 0, 0});  // norm 20
    const ParamVector c = clip_by_global_norm(g, 10.0);
    CHECK(std::abs(l2_norm(c) - 10.0) <= 1e-12);
    CHECK(std::abs(dot(c.values(), g.values()) / (l2_norm(c) * l2_norm(g)) - 1.0) <= 1e-12);
    CHECK(c.layout() == g.layout());

    const ParamVector small = two_segment({0.3, 0.4, 0, 0});
    CHECK(clip_by_global_norm(small, 1.0) == small);
    const ParamVector zero = two_segment({0, 0, 0, 0});
    CHECK(clip_by_global_norm(zero, 1.0) == zero);
    CHECK_THROWS_AS(clip_by_global_norm(g, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(clip_by_global_norm(g, -1.0), std::invalid_argument);
    CHECK(clip_by_global_norm(c, 10.0) == c);
  }

  TEST_CASE("param vector layout integrity") {
    CHECK_THROWS_AS(make_layout({{"a", 0, 2}, {"b", 3, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(make_layout({{"a", 0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(ParamVector(make_layout({{"a", 0, 2}}), {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(ParamVector(make_layout({{"a", 0, 1}}), {NAN}), std::invalid_argument);
    const ParamVector p = two_segment({1, 2, 3, 4});
    CHECK(p.segment(1)[0] == 3.0);
    CHECK(p.layout().index_of("b") == 1);
    const ParamVector q = ParamVector(make_layout({{"x", 0, 4}}), {1, 2, 3, 4});
    ParamVector r = p;
    CHECK_THROWS_AS(r += q, std::invalid_argument);
    const ParamVector s = p + p;
    CHECK(s.layout() == p.layout());
    CHECK(s[3] == 8.0);
  }

  TEST_CASE("stable logistic helpers") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(std::abs(log_sigmoid(-800.0) + 800.0) < 1e-9);
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(std::abs(binary_entropy(0.5) - std::log(2.0)) < 1e-15);
    CHECK(bernoulli_kl(0.3, 0.3) == doctest::Approx(0.0));
    CHECK(std::abs(bernoulli_kl_from_logit(0.3, std::log(0.4 / 0.6)) - bernoulli_kl(0.3, 0.4)) < 1e-14);
  }
}
