#include "hacklab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hacklab/chi.hpp"

namespace hacklab {

ParamVector masked_gaussian_direction(const ParamVector& like, const PerturbMask& mask, double scale,
                                      Rng& rng) {
  if (mask.size() != like.layout().size())
    throw std::invalid_argument("masked_gaussian_direction: mask does not match layout");
  ParamVector d = ParamVector::zeros_like(like);
  for (std::size_t l = 0; l < mask.size(); ++l) {
    if (!mask.perturbable(l)) continue;
    for (double& v : d.segment(l)) v = rng.normal();
  }
  const double norm = l2_norm(d);
  if (norm > 0.0) d *= scale / norm;
  return d;
}

double sharpness_probe_objective(const std::function<double(const ParamVector&)>& objective,
                                 const ParamVector& phi, const PerturbMask& mask, std::size_t k,
                                 double probe_scale, Rng& rng) {
  if (k == 0) throw std::invalid_argument("sharpness_probe: k must be >= 1");
  if (!(probe_scale >= 0.0)) throw std::invalid_argument("sharpness_probe: probe_scale must be >= 0");
  const double base = objective(phi);
  double worst = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const ParamVector d = masked_gaussian_direction(phi, mask, 1.0, rng);
    const double drop = base - objective(perturb(phi, d, probe_scale, mask));
    worst = std::max(worst, drop);
  }
  return worst;
}

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
Vec symmetric_eigenvalues(std::vector<Vec> a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  Vec ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  return ev;
}

}  // namespace

JacobianSpectrum mean_jacobian_spectrum(const GaussianPolicy& policy, std::size_t s) {
  const auto rows = policy.mean_jacobian(s);
  const std::size_t d = rows.size();
  std::vector<Vec> gram(d, Vec(d, 0.0));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) gram[i][j] = dot(rows[i].values(), rows[j].values());
  const Vec ev = symmetric_eigenvalues(std::move(gram));
  const auto [lo, hi] = std::minmax_element(ev.begin(), ev.end());
  return {std::sqrt(std::max(0.0, *hi)), std::sqrt(std::max(0.0, *lo))};
}

BoundReport check_pairwise_bound(const BumpLandscape& landscape, const GaussianPolicy& policy, double K,
                                 double delta, std::size_t n, Rng& rng, std::size_t state) {
  if (landscape.dim() != policy.action_dim())
    throw std::invalid_argument("check_pairwise_bound: landscape and policy dimensions differ");
  const Vec mu = policy.mean(state);
  const double grad_norm = norm2(landscape.gradient(mu));
  const double beta = landscape.smoothness();
  const double r = (K / delta - grad_norm) / beta;
  const bool vacuous = !(K / delta > grad_norm);
  const std::size_t d = policy.action_dim();
  const double rhs = vacuous ? std::numeric_limits<double>::infinity() : 2.0 * chi_tail(d, r, policy.sigma());
  const auto reward = [&](std::size_t, const Vec& a) { return landscape.value(a); };
  const Estimate lhs = violation_rate(policy, reward, K, delta, n, rng, static_cast<long>(state));
  return BoundReport("pairwise_robustness", BoundKind::upper, lhs.value, rhs, lhs.se,
                     {{"K", K},
                      {"delta", delta},
                      {"r", r},
                      {"beta", beta},
                      {"grad_norm_at_mean", grad_norm},
                      {"sigma", policy.sigma()},
                      {"E_norm_Z", chi_mean(d, policy.sigma())},
                      {"n", static_cast<double>(n)}},
                     vacuous, vacuous ? "K/delta does not exceed the gradient norm at the mean" : "");
}

BoundReport check_gradient_bound(const BumpLandscape& landscape, const GaussianPolicy& policy, double E_ball,
                                 std::size_t n, Rng& rng, const GradientBoundOptions& opt) {
  if (!(E_ball > 0.0)) throw std::invalid_argument("check_gradient_bound: E_ball must be positive");
  if (n == 0) throw std::invalid_argument("check_gradient_bound: n must be >= 1");
  if (landscape.dim() != policy.action_dim())
    throw std::invalid_argument("check_gradient_bound: landscape and policy dimensions differ");
  const std::size_t s = opt.state;
  const std::size_t d = policy.action_dim();
  const Rng crn = rng.child(0xc0ffee);
  rng.next_u64();
  const auto J = [&](const ParamVector& p) {
    const GaussianPolicy pol = policy.with_params(p);
    if (opt.mode == LhatMode::analytic) return landscape.expected_value(pol.mean(s), pol.sigma());
    double total = 0.0;
    for (std::size_t j = 0; j < opt.rollouts; ++j) {
      Rng r = crn.child(j);
      total += landscape.value(pol.sample(s, 1, r).front());
    }
    return total / static_cast<double>(opt.rollouts);
  };
  const ParamVector& phi = policy.params();
  const PerturbMask all = PerturbMask::all_layers(policy.net().spec());
  const Vec mu = policy.mean(s);
  const double base = J(phi);
  const double dim = static_cast<double>(phi.size());
  double l_hat = 0.0;
  double max_shift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double radius = E_ball * std::pow(rng.uniform(), 1.0 / dim);
    const ParamVector eps = masked_gaussian_direction(phi, all, radius, rng);
    const ParamVector moved = phi + eps;
    l_hat = std::max(l_hat, base - J(moved));
    const Vec mu2 = policy.net().forward(moved, policy.state(s));
    double sh = 0.0;
    for (std::size_t k = 0; k < d; ++k) sh += (mu2[k] - mu[k]) * (mu2[k] - mu[k]);
    max_shift = std::max(max_shift, std::sqrt(sh));
  }
  const JacobianSpectrum spec = mean_jacobian_spectrum(policy, s);
  const double d_star = spec.s_min * E_ball;
  const double beta = landscape.smoothness();
  const double ez = chi_mean(d, policy.sigma());
  const bool vacuous = !(d_star > 0.0);
  const double G = vacuous ? std::numeric_limits<double>::infinity() : l_hat / d_star + 0.5 * beta * d_star + beta * ez;
  const double grad_norm = norm2(landscape.gradient(mu));
  return BoundReport("flat_maximum_gradient", BoundKind::upper, grad_norm, G, 0.0,
                     {{"E_ball", E_ball},
                      {"L_hat", l_hat},
                      {"D_star", d_star},
                      {"D_star_upper", spec.s_max * E_ball},
                      {"mean_shift_max", max_shift},
                      {"mean_shift_residual", max_shift - spec.s_max * E_ball},
                      {"beta", beta},
                      {"E_norm_Z", ez},
                      {"G", G},
                      {"n", static_cast<double>(n)},
                      {"analytic", opt.mode == LhatMode::analytic ? 1.0 : 0.0}},
                     vacuous, vacuous ? "mean Jacobian is rank deficient" : "");
}

BoundReport check_bt_lower_bound(const BumpLandscape& gold, const BumpLandscape& proxy,
                                 const GaussianPolicy& policy, double K, double delta, std::size_t n, Rng& rng,
                                 std::size_t state) {
  const double L = gold.lipschitz();
  if (!(K > L * delta)) throw std::invalid_argument("check_bt_lower_bound: requires K > L delta");
  if (n < 2) throw std::invalid_argument("check_bt_lower_bound: n must be >= 2");
  if (gold.dim() != policy.action_dim() || proxy.dim() != policy.action_dim())
    throw std::invalid_argument("check_bt_lower_bound: landscape and policy dimensions differ");
  const double gap = sigmoid(K) - sigmoid(L * delta);
  const double coef = 2.0 * gap * gap;
  std::vector<double> kl(n), viol(n), diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = policy.sample(state, 2, rng);
    const double dg = gold.value(a[1]) - gold.value(a[0]);
    const double dp = proxy.value(a[1]) - proxy.value(a[0]);
    kl[i] = dg == dp ? 0.0 : bernoulli_kl_from_logit(sigmoid(dg), dp);
    viol[i] = action_distance(a[0], a[1]) <= delta && std::abs(dp) > K ? 1.0 : 0.0;
    diff[i] = kl[i] - coef * viol[i];
  }
  const Estimate excess = mean_and_se(kl);
  const Estimate rate = mean_and_se(viol);
  const Estimate margin = mean_and_se(diff);
  return BoundReport("bt_excess_lower_bound", BoundKind::lower, excess.value, coef * rate.value, margin.se,
                     {{"K", K},
                      {"delta", delta},
                      {"L", L},
                      {"coefficient", coef},
                      {"violation_rate", rate.value},
                      {"violation_rate_se", rate.se},
                      {"excess_se", excess.se},
                      {"n", static_cast<double>(n)}});
}

double correlate(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("correlate: series lengths differ");
  if (a.size() < 10) throw std::invalid_argument("correlate: need at least 10 points");
  const auto n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw std::domain_error("correlate: zero-variance series");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace hacklab
