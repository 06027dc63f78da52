#include "dflow/adjoint.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dflow/errors.hpp"

namespace dflow {

void AdjointWorkspace::resize(int dim) {
  std::size_t d = static_cast<std::size_t>(dim);
  noise_b.assign(d, 0.0);
  u.assign(d, 0.0);
  lam.assign(d, 0.0);
  gx.assign(d, 0.0);
  cot.assign(d, 0.0);
  f_val.assign(d, 0.0);
  s_val.assign(d, 0.0);
  sized_for = dim;
}

LossParts adjoint_gradient(const Model& model, const Trajectory& traj,
                           const DiffusionSchedule& schedule,
                           std::span<double> grad, AdjointWorkspace& ws) {
  int d = traj.dim;
  int n = traj.grid.steps();
  if (model.dim() != d) throw ContractError("adjoint_gradient: dim mismatch");
  if (grad.size() != model.param_count()) {
    throw ContractError("adjoint_gradient: grad size mismatch");
  }
  ws.ensure(d);
  std::span<double> grad_f = grad.subspan(0, model.drift->param_count());
  std::span<double> grad_s = grad.subspan(model.drift->param_count());

  LossParts parts;
  parts.prior_term = 0.5 * squared_norm(traj.state(n)) +
                     0.5 * d * std::log(2.0 * std::numbers::pi);
  parts.fwd_noise_half_sq = 0.5 * squared_norm(traj.fwd_noise);
  double g0 = schedule.node(0), gn = schedule.node(n);
  if (!(g0 > 0.0) || !(gn > 0.0)) {
    throw NumericError("adjoint: diffusion must be positive at the endpoints");
  }
  parts.log_g_ratio = d * std::log(gn / g0);

  // lam carries dL/dx_{i+1}; at the boundary only the prior term depends on
  // the terminal state.
  copy_to(traj.state(n), ws.lam);

  for (int i = n - 1; i >= 0; --i) {
    double dt = traj.grid.dt(i);
    double g = schedule.node(i + 1);
    if (!(g > 0.0)) {
      throw NumericError("adjoint needs g > 0 at node " + std::to_string(i + 1));
    }
    double g2 = g * g;
    double k = 1.0 / (g * std::sqrt(dt));
    double t_next = traj.grid.time(i + 1);
    auto x = traj.state(i);
    auto x_next = traj.state(i + 1);

    model.drift->eval(x_next, t_next, ws.f_val);
    model.score->eval(x_next, t_next, ws.s_val);
    for (int c = 0; c < d; ++c) {
      std::size_t j = static_cast<std::size_t>(c);
      ws.noise_b[j] = k * (x[j] - x_next[j] + (ws.f_val[j] - g2 * ws.s_val[j]) * dt);
    }
    parts.noise_term_sum += 0.5 * squared_norm(ws.noise_b);

    // u = dL/dx_{i+1} with the step objective's own dependence included:
    //   u = lam + k [-noise_b + dt (J_f^T - g^2 J_s^T) noise_b]
    for (int c = 0; c < d; ++c) {
      std::size_t j = static_cast<std::size_t>(c);
      ws.u[j] = ws.lam[j] - k * ws.noise_b[j];
      ws.cot[j] = k * dt * ws.noise_b[j];
    }
    model.drift->vjp(x_next, t_next, ws.cot, ws.gx, grad_f);
    axpy(1.0, ws.gx, std::span<double>(ws.u));
    for (int c = 0; c < d; ++c) {
      ws.cot[static_cast<std::size_t>(c)] =
          -k * g2 * dt * ws.noise_b[static_cast<std::size_t>(c)];
    }
    model.score->vjp(x_next, t_next, ws.cot, ws.gx, grad_s);
    axpy(1.0, ws.gx, std::span<double>(ws.u));

    // Pull u back through the forward map x + f(x, t_i) dt and add the step
    // objective's direct dependence on x_i (which is k * noise_b).
    for (int c = 0; c < d; ++c) {
      ws.cot[static_cast<std::size_t>(c)] = dt * ws.u[static_cast<std::size_t>(c)];
    }
    model.drift->vjp(x, traj.grid.time(i), ws.cot, ws.gx, grad_f);
    for (int c = 0; c < d; ++c) {
      std::size_t j = static_cast<std::size_t>(c);
      ws.lam[j] = ws.u[j] + ws.gx[j] + k * ws.noise_b[j];
    }
  }
  return parts;
}

}  // namespace dflow
