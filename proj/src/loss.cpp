#include "dflow/loss.hpp"

#include <cmath>
#include <numbers>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

double log_2pi() { return std::log(2.0 * std::numbers::pi); }

}  // namespace

LossBreakdown loss_for_trajectory(const Model& model, const Trajectory& traj,
                                  const DiffusionSchedule& schedule) {
  int n = traj.grid.steps();
  int d = traj.dim;
  LossBreakdown out;
  out.noise_terms.assign(static_cast<std::size_t>(n), 0.0);

  std::vector<double> noise_b(static_cast<std::size_t>(n) * d);
  reconstruct_backward_noise(*model.drift, *model.score, traj, schedule, noise_b);
  for (int i = 0; i < n; ++i) {
    auto b = row(noise_b, static_cast<std::size_t>(d), static_cast<std::size_t>(i));
    out.noise_terms[static_cast<std::size_t>(i)] = 0.5 * squared_norm(b);
  }

  LossParts& p = out.parts;
  p.prior_term = 0.5 * squared_norm(traj.state(n)) + 0.5 * d * log_2pi();
  for (double v : out.noise_terms) p.noise_term_sum += v;
  p.fwd_noise_half_sq = 0.5 * squared_norm(traj.fwd_noise);
  double g0 = schedule.node(0), gn = schedule.node(n);
  if (!(g0 > 0.0) || !(gn > 0.0)) {
    throw NumericError("loss: diffusion must be positive at the endpoints");
  }
  p.log_g_ratio = d * std::log(gn / g0);
  return out;
}

LossBreakdown batch_loss(const Model& model, std::span<const double> x0,
                         std::size_t n, const TimeGrid& grid,
                         const DiffusionSchedule& schedule, Rng& rng) {
  if (n == 0) throw ContractError("batch_loss: empty batch");
  std::size_t d = static_cast<std::size_t>(model.dim());
  LossBreakdown mean;
  mean.noise_terms.assign(static_cast<std::size_t>(grid.steps()), 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    Rng sample_rng = rng.child(s);
    Trajectory traj = sample_forward_trajectory(*model.drift, x0.subspan(s * d, d),
                                                grid, schedule, sample_rng);
    LossBreakdown one = loss_for_trajectory(model, traj, schedule);
    mean.parts.prior_term += one.parts.prior_term;
    mean.parts.noise_term_sum += one.parts.noise_term_sum;
    mean.parts.fwd_noise_half_sq += one.parts.fwd_noise_half_sq;
    mean.parts.log_g_ratio += one.parts.log_g_ratio;
    for (std::size_t i = 0; i < mean.noise_terms.size(); ++i) {
      mean.noise_terms[i] += one.noise_terms[i];
    }
  }
  double inv = 1.0 / static_cast<double>(n);
  mean.parts.prior_term *= inv;
  mean.parts.noise_term_sum *= inv;
  mean.parts.fwd_noise_half_sq *= inv;
  mean.parts.log_g_ratio *= inv;
  for (double& v : mean.noise_terms) v *= inv;
  return mean;
}

}  // namespace dflow
