#pragma once

#include <span>
#include <vector>

#include "dflow/loss.hpp"
#include "dflow/model.hpp"
#include "dflow/sde.hpp"

namespace dflow {

// Fixed-size scratch for the backward sweep. Size depends only on the state
// dimension, never on the number of steps.
struct AdjointWorkspace {
  std::vector<double> noise_b, u, lam, gx, cot, f_val, s_val;
  int sized_for = -1;

  void resize(int dim);
  void ensure(int dim) {
    if (sized_for != dim) resize(dim);
  }
};

// Pathwise gradient of the trajectory objective
//   L(theta) = -log N(x_N; 0, I) + sum_i 1/2 |noise_b_i(theta)|^2
// with the forward noises held fixed, so states x_{i+1} = x_i + f dt + g dW
// depend on the drift parameters. One backward sweep per trajectory with
// three VJPs per step (drift at both step endpoints, score at the newer
// one); nothing is stored per step beyond the caller's trajectory, so
// scratch memory is O(d + P) independent of the step count.
//
// grad += dL/dtheta, packed [drift | score] like Model::get_params. Returns
// the loss parts for the trajectory as a byproduct.
LossParts adjoint_gradient(const Model& model, const Trajectory& traj,
                           const DiffusionSchedule& schedule,
                           std::span<double> grad, AdjointWorkspace& ws);

}  // namespace dflow
