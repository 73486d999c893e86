#pragma once

#include <cstddef>
#include <span>

#include "hacklab/bound_report.hpp"
#include "hacklab/numeric.hpp"

namespace hacklab {

Vec softmax(std::span<const double> logits);
double total_variation(std::span<const double> p, std::span<const double> q);

// pi proportional to pi1 * exp(k R / beta). beta may be +infinity.
Vec reset_closed_form(std::span<const double> pi1, std::span<const double> rewards, double beta,
                      std::size_t k);

struct KlStageResult {
  Vec logits;
  std::size_t iterations = 0;
  bool converged = false;
};

// Maximizes E_pi[R] - beta KL(pi || ref) over softmax logits, starting from
// the reference, with damped natural-gradient steps
//   z <- z + eta (R / beta - (log pi - log ref)).
// Converged once the stationarity residual drops below tol.
KlStageResult optimize_kl_stage(std::span<const double> ref_logits, std::span<const double> rewards,
                                double beta, std::size_t max_steps, double eta = 0.5,
                                double tol = 1e-12);

struct ResetRun {
  Vec iterative;    // policy after k reset stages
  Vec closed_form;  // pi1 exp(k R / beta), normalized
  double tv = 0.0;
  bool converged = true;
};

// k stages of KL-regularized optimization, resetting the reference to the
// stage optimum after each stage.
ResetRun run_reset_stages(std::span<const double> init_logits, std::span<const double> rewards,
                          double beta, std::size_t k_iters, std::size_t opt_steps);

// BoundReport "reset_asymptotics": TV(iterative, closed form) <= tol.
BoundReport check_reset_asymptotics(std::span<const double> init_logits, std::span<const double> rewards,
                                    double beta, std::size_t k_iters, std::size_t opt_steps,
                                    double tol = 1e-3);

}  // namespace hacklab
