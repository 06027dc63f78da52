#pragma once

#include <span>

#include "dflow/grid.hpp"
#include "dflow/model.hpp"

namespace dflow {

struct NfNllResult {
  double nll = 0.0;         // nats
  double prior_term = 0.0;  // -log N(x_N; 0, I)
  double logdet_sum = 0.0;  // sum_i log |det(I + dt_i J_f(x_i, t_i))|
};

// Likelihood of the zero-diffusion limit: the forward dynamics degenerate to
// the deterministic map x_{i+1} = x_i + f(x_i, t_i) dt_i, a discrete-time
// flow whose exact density follows from the change of variables
//   nll(x_0) = -log N(x_N; 0, I) - sum_i log |det(I + dt_i J_f(x_i, t_i))|.
// Step Jacobians are assembled row by row from cotangent probes and factored
// by partial-pivot LU. Throws NumericError (naming the step) if a step map
// is singular or the state goes non-finite.
NfNllResult nf_mode_nll(const Model& model, std::span<const double> x0,
                        const TimeGrid& grid);

}  // namespace dflow
