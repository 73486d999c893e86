#include "hacklab/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hacklab {

namespace {

Vec log_softmax(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  Vec out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

void check_bandit(std::span<const double> logits, std::span<const double> rewards, double beta) {
  if (logits.size() < 2) throw std::invalid_argument("bandit: need at least two arms");
  if (rewards.size() != logits.size()) throw std::invalid_argument("bandit: rewards/arms size mismatch");
  if (!(beta > 0.0)) throw std::invalid_argument("bandit: beta must be positive");
  for (double v : logits)
    if (!std::isfinite(v)) throw std::invalid_argument("bandit: non-finite logit");
  for (double v : rewards)
    if (!std::isfinite(v)) throw std::invalid_argument("bandit: non-finite reward");
}

}  // namespace

Vec softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  Vec out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

Vec reset_closed_form(std::span<const double> pi1, std::span<const double> rewards, double beta,
                      std::size_t k) {
  if (pi1.size() != rewards.size()) throw std::invalid_argument("reset_closed_form: size mismatch");
  if (!(beta > 0.0)) throw std::invalid_argument("reset_closed_form: beta must be positive");
  Vec z(pi1.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(pi1[i] > 0.0)) throw std::invalid_argument("reset_closed_form: pi1 must be positive");
    z[i] = std::log(pi1[i]) + (std::isinf(beta) ? 0.0 : static_cast<double>(k) * rewards[i] / beta);
  }
  return softmax(z);
}

KlStageResult optimize_kl_stage(std::span<const double> ref_logits, std::span<const double> rewards,
                                double beta, std::size_t max_steps, double eta, double tol) {
  check_bandit(ref_logits, rewards, beta);
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("optimize_kl_stage: eta must lie in (0, 1]");
  const Vec log_ref = log_softmax(ref_logits);
  KlStageResult res;
  res.logits.assign(ref_logits.begin(), ref_logits.end());
  const std::size_t m = rewards.size();
  Vec step(m);
  for (std::size_t it = 0; it <= max_steps; ++it) {
    const Vec log_pi = log_softmax(res.logits);
    // Stationarity of the regularized objective: log pi - log ref - R/beta
    // is constant across arms.
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      step[i] = (std::isinf(beta) ? 0.0 : rewards[i] / beta) - (log_pi[i] - log_ref[i]);
      mean += step[i];
    }
    mean /= static_cast<double>(m);
    double resid = 0.0;
    for (std::size_t i = 0; i < m; ++i) resid = std::max(resid, std::abs(step[i] - mean));
    res.iterations = it;
    if (resid < tol) {
      res.converged = true;
      break;
    }
    if (it == max_steps) break;
    for (std::size_t i = 0; i < m; ++i) res.logits[i] += eta * (step[i] - mean);
  }
  return res;
}

ResetRun run_reset_stages(std::span<const double> init_logits, std::span<const double> rewards,
                          double beta, std::size_t k_iters, std::size_t opt_steps) {
  check_bandit(init_logits, rewards, beta);
  if (k_iters == 0) throw std::invalid_argument("run_reset_stages: k_iters must be >= 1");
  ResetRun out;
  Vec ref(init_logits.begin(), init_logits.end());
  for (std::size_t stage = 0; stage < k_iters; ++stage) {
    const auto res = optimize_kl_stage(ref, rewards, beta, opt_steps);
    out.converged = out.converged && res.converged;
    ref = res.logits;
  }
  out.iterative = softmax(ref);
  out.closed_form = reset_closed_form(softmax(init_logits), rewards, beta, k_iters);
  out.tv = total_variation(out.iterative, out.closed_form);
  return out;
}

BoundReport check_reset_asymptotics(std::span<const double> init_logits, std::span<const double> rewards,
                                    double beta, std::size_t k_iters, std::size_t opt_steps, double tol) {
  const auto run = run_reset_stages(init_logits, rewards, beta, k_iters, opt_steps);
  return BoundReport("reset_asymptotics", BoundKind::upper, run.tv, tol, 0.0,
                     {{"m", static_cast<double>(rewards.size())},
                      {"beta", beta},
                      {"k", static_cast<double>(k_iters)},
                      {"opt_steps", static_cast<double>(opt_steps)},
                      {"converged", run.converged ? 1.0 : 0.0}},
                     false, run.converged ? "" : "optimizer did not converge within opt_steps");
}

}  // namespace hacklab
