#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "hacklab/bandit.hpp"
#include "hacklab/chi.hpp"
#include "hacklab/diagnostics.hpp"
#include "hacklab/trainer.hpp"

namespace hacklab::app {

namespace {

GaussianPolicy centered(const Vec& center, double sigma, Rng& rng) {
  return GaussianPolicy::make({Vec{1.0, -0.5}}, {8, 8}, center.size(), sigma, rng).recentered(center);
}

Vec center_of(const BumpLandscape& land, std::size_t which) { return land.bumps()[which].center; }

BoundReport renamed(const BoundReport& r, const std::string& name) {
  return BoundReport(name, r.kind(), r.lhs(), r.rhs(), r.se(), r.inputs(), r.vacuous(), r.note());
}

std::vector<BoundReport> pairwise_suite(std::size_t n, const Rng& root) {
  const BumpLandscape land = two_basin_benchmark();
  std::vector<BoundReport> out;
  {
    Rng rng = root.child(0);
    const GaussianPolicy pol = centered(center_of(land, kFlatBasin), 0.3, rng);
    out.push_back(renamed(check_pairwise_bound(land, pol, 0.5, 0.05, n, rng), "pairwise_flat_center"));
  }
  {
    Rng rng = root.child(1);
    // K / delta = 2 lies below the sharp bump's Lipschitz constant, so
    // violations do occur here.
    const GaussianPolicy pol = centered(center_of(land, kSharpBasin), 0.3, rng);
    out.push_back(renamed(check_pairwise_bound(land, pol, 0.1, 0.05, n, rng), "pairwise_sharp_center"));
  }
  {
    Rng rng = root.child(2);
    const GaussianPolicy pol = centered(center_of(land, kSharpBasin), 1e-3, rng);
    out.push_back(renamed(check_pairwise_bound(land, pol, 0.5, 0.05, n, rng), "pairwise_small_sigma"));
  }
  {
    // Closed-form E||Z|| against its sample mean, two-sided at 3 SE.
    Rng rng = root.child(3);
    const std::size_t d = 2;
    const double sigma = 0.3;
    std::vector<double> norms(n);
    for (double& x : norms) x = l2_norm(gaussian_sample(rng, d, sigma));
    const Estimate m = mean_and_se(norms);
    const double exact = chi_mean(d, sigma);
    out.emplace_back("chi_mean", BoundKind::upper, std::abs(m.value - exact), 0.0, m.se,
                     std::map<std::string, double>{{"sample_mean", m.value}, {"closed_form", exact},
                                                   {"sigma", sigma}, {"d", static_cast<double>(d)},
                                                   {"n", static_cast<double>(n)}});
  }
  return out;
}

std::vector<BoundReport> gradient_suite(std::size_t n, const Rng& root) {
  const BumpLandscape land = two_basin_benchmark();
  const std::size_t perturbations = std::min<std::size_t>(n, 1000);
  std::vector<BoundReport> out;
  {
    Rng rng = root.child(0);
    const GaussianPolicy pol = centered(center_of(land, kFlatBasin), 0.3, rng);
    out.push_back(renamed(check_gradient_bound(land, pol, 0.1, perturbations, rng), "gradient_flat_center"));
  }
  Vec off = center_of(land, kFlatBasin);
  off[0] += 0.1 * land.bumps()[kFlatBasin].width;
  {
    Rng rng = root.child(1);
    const GaussianPolicy pol = centered(off, 0.3, rng);
    out.push_back(renamed(check_gradient_bound(land, pol, 0.1, perturbations, rng), "gradient_off_center_mc"));
  }
  {
    Rng rng = root.child(2);
    const GaussianPolicy pol = centered(off, 0.3, rng);
    GradientBoundOptions opt;
    opt.mode = LhatMode::analytic;
    out.push_back(
        renamed(check_gradient_bound(land, pol, 0.1, perturbations, rng, opt), "gradient_off_center_analytic"));
  }
  return out;
}

std::vector<BoundReport> bt_suite(std::size_t n, const Rng& root) {
  // 1-D gold bump with L = e^{-1/2}; K = 2 and L delta = 0.5 give the
  // coefficient 2 (sigmoid(2) - sigmoid(0.5))^2.
  const BumpLandscape gold({Bump{Vec{0.0}, 1.0, 1.0}});
  const double K = 2.0;
  const double delta = 0.5 / gold.lipschitz();
  const Vec spike{0.5};
  const BumpLandscape proxy = gold.with_bump(Bump{spike, 2.0 * K, delta / 4.0});
  std::vector<BoundReport> out;
  {
    Rng rng = root.child(0);
    const GaussianPolicy pol = centered(spike, 0.3, rng);
    out.push_back(renamed(check_bt_lower_bound(gold, gold, pol, K, delta, n, rng), "bt_perfect_proxy"));
  }
  {
    Rng rng = root.child(1);
    const GaussianPolicy pol = centered(spike, 0.3, rng);
    out.push_back(renamed(check_bt_lower_bound(gold, proxy, pol, K, delta, n, rng), "bt_spiked_proxy"));
  }
  return out;
}

std::vector<BoundReport> reset_suite(const Rng& root) {
  std::vector<BoundReport> out;
  const std::size_t opt_steps = 20000;
  out.push_back(renamed(check_reset_asymptotics(Vec{0.0, 0.0}, Vec{1.0, 0.0}, 1.0, 2, opt_steps), "reset_two_arm_k2"));
  std::uint64_t id = 0;
  for (std::size_t m : {2u, 10u}) {
    Rng rng = root.child(id++);
    const Vec logits = gaussian_sample(rng, m, 1.0);
    const Vec rewards = gaussian_sample(rng, m, 1.0);
    for (std::size_t k : {1u, 2u, 4u}) {
      out.push_back(renamed(check_reset_asymptotics(logits, rewards, 0.5, k, opt_steps),
                            "reset_m" + std::to_string(m) + "_k" + std::to_string(k)));
    }
    out.push_back(renamed(check_reset_asymptotics(logits, rewards, std::numeric_limits<double>::infinity(), 4, opt_steps),
                          "reset_m" + std::to_string(m) + "_beta_inf"));
  }
  return out;
}

// J = -1/2 phi^T A phi - (c/4) sum phi^4 with diagonal A: the two-gradient
// difference (g1 - g2) / eps estimates H grad J, the gradient of 1/2 ||grad J||^2.
struct Stub {
  Vec a;
  double quartic = 0.0;
  ParamVector grad(const ParamVector& p) const {
    ParamVector g = ParamVector::zeros_like(p);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = -a[i] * p[i] - quartic * p[i] * p[i] * p[i];
    return g;
  }
  ParamVector penalty_grad(const ParamVector& p) const {
    ParamVector g = grad(p);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= -a[i] - 3.0 * quartic * p[i] * p[i];
    return g;
  }
};

double fd_error(const Stub& stub, const ParamVector& phi, double eps) {
  const PerturbMask all(std::vector<bool>(phi.layout().size(), true));
  const auto oracle = [&](const ParamVector& p) { return stub.grad(p); };
  const GrGradient gr = gr_combine(oracle, phi, 1.0, eps, all, std::numeric_limits<double>::infinity());
  const ParamVector target = stub.penalty_grad(phi);
  return l2_norm((1.0 / eps) * (gr.g1 - gr.g2) - target) / l2_norm(target);
}

std::vector<BoundReport> fd_suite(const Rng& root) {
  Rng rng = root.child(0);
  const std::size_t dim = 12;
  const LayoutPtr layout = make_layout({{"layer0", 0, 4}, {"layer1", 4, 4}, {"layer2", 8, 4}});
  Vec a(dim);
  for (double& x : a) x = 0.25 + 2.75 * rng.uniform();
  ParamVector phi = ParamVector::zeros(layout);
  for (double& x : phi.values()) x = rng.normal() * 0.5;
  std::vector<BoundReport> out;
  const std::vector<double> eps_grid{1e-2, 1e-3, 1e-4};
  for (double quartic : {0.0, 0.5}) {
    const Stub stub{a, quartic};
    std::vector<double> errs;
    const std::string tag = quartic == 0.0 ? "fd_quadratic" : "fd_quartic";
    for (double eps : eps_grid) {
      errs.push_back(fd_error(stub, phi, eps));
      out.emplace_back(tag + "_eps_" + std::to_string(static_cast<int>(std::lround(-std::log10(eps)))),
                       BoundKind::upper, errs.back(), 10.0 * eps, 0.0,
                       std::map<std::string, double>{{"eps", eps}, {"quartic", quartic}});
    }
    if (quartic > 0.0) {
      // Error should fall one decade per decade of eps.
      const double slope = std::log10(errs.front() / errs.back()) / 2.0;
      out.emplace_back("fd_quartic_error_slope", BoundKind::upper, std::abs(slope - 1.0), 0.2, 0.0,
                       std::map<std::string, double>{{"slope", slope}});
    }
  }
  return out;
}

const std::vector<std::string> kSuites{"pairwise", "gradient", "bt_bound", "resets", "fd_estimator"};

}  // namespace

const std::vector<std::string>& suite_names() { return kSuites; }

bool is_suite(const std::string& name) {
  return name == "all" || std::find(kSuites.begin(), kSuites.end(), name) != kSuites.end();
}

std::vector<BoundReport> run_suite(const std::string& suite, std::size_t n, std::uint64_t seed) {
  if (!is_suite(suite)) throw std::invalid_argument("unknown suite '" + suite + "'");
  if (n < 1000) throw std::invalid_argument("n must be >= 1000");
  const Rng root(seed);
  std::vector<BoundReport> out;
  for (std::size_t i = 0; i < kSuites.size(); ++i) {
    const std::string& name = kSuites[i];
    if (suite != "all" && suite != name) continue;
    const Rng r = root.child(i);
    std::vector<BoundReport> part;
    if (name == "pairwise") part = pairwise_suite(n, r);
    if (name == "gradient") part = gradient_suite(n, r);
    if (name == "bt_bound") part = bt_suite(n, r);
    if (name == "resets") part = reset_suite(r);
    if (name == "fd_estimator") part = fd_suite(r);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace hacklab::app
