#pragma once

#include <span>
#include <vector>

#include "dflow/model.hpp"
#include "dflow/sde.hpp"

namespace dflow {

// Scalar decomposition of the per-trajectory objective
//   L = -log N(x_N; 0, I) + sum_i 1/2 |noise_b_i|^2.
// The terms dropped from the trainable objective but needed to turn L into a
// likelihood bound are carried alongside: the forward-noise half square sum
// (a constant under the pathwise/reparameterized gradient) and the
// diffusion-ratio constant d*log(g_N/g_0) left over after the forward and
// backward Gaussian normalizers cancel stepwise.
struct LossParts {
  double prior_term = 0.0;         // -log N(x_N; 0, I)
  double noise_term_sum = 0.0;     // sum_i 1/2 |noise_b_i|^2
  double fwd_noise_half_sq = 0.0;  // sum_i 1/2 |noise_f_i|^2
  double log_g_ratio = 0.0;        // d * log(g_N / g_0)

  double total() const { return prior_term + noise_term_sum; }
  // Upper bound on -log p(x_0) for this trajectory (averaging over
  // trajectories tightens it into the negative ELBO).
  double nll_bound() const {
    return total() - fwd_noise_half_sq + log_g_ratio;
  }
};

// LossParts plus the per-step noise terms for diagnostics.
struct LossBreakdown {
  LossParts parts;
  std::vector<double> noise_terms;  // noise_terms[i] = 1/2 |noise_b_i|^2
};

// Deterministic given the trajectory; requires g > 0 at nodes 1..N (and at
// node 0 for the ratio constant).
LossBreakdown loss_for_trajectory(const Model& model, const Trajectory& traj,
                                  const DiffusionSchedule& schedule);

// Simulates one forward trajectory per row of x0 (row-major n x d) and
// averages. Per-sample noise comes from rng.child(sample index), so results
// do not depend on evaluation order.
LossBreakdown batch_loss(const Model& model, std::span<const double> x0,
                         std::size_t n, const TimeGrid& grid,
                         const DiffusionSchedule& schedule, Rng& rng);

}  // namespace dflow
