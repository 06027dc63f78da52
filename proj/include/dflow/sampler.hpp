#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dflow/grid.hpp"
#include "dflow/model.hpp"
#include "dflow/rng.hpp"

namespace dflow {

// One-parameter family of reverse-time kernels sharing the marginals of the
// learned backward dynamics (assuming an exact score):
//   x_i = x_{i+1} - [f - (1 + lambda^2)/2 g^2 s](x_{i+1}, t_{i+1}) dt_i
//         + lambda g_{i+1} sqrt(dt_i) noise.
// lambda = 1 reproduces the training-time backward kernel bit for bit;
// lambda = 0 is the deterministic probability-flow update.
struct SamplerConfig {
  double lambda = 1.0;
  // Replace the final step with the posterior-mean denoise
  //   x_0 = x_1 + g_1^2 dt_0 s(x_1, t_1),
  // which removes the last injection of noise.
  bool tweedie_final = true;
};

void backward_lambda_step(std::span<const double> x,
                          std::span<const double> drift_at_x,
                          std::span<const double> score_at_x, double g,
                          double dt, double lambda,
                          std::span<const double> noise,
                          std::span<double> x_prev);

// Runs x (the terminal state, size d) down the grid in place. When `path`
// is given it receives all (steps + 1) x d visited states, path[i] being the
// state at node i. Throws NumericError if the state goes non-finite.
void sample_backward_path(const Model& model, const TimeGrid& grid,
                          const DiffusionSchedule& schedule,
                          const SamplerConfig& cfg, Rng& rng,
                          std::span<double> x,
                          std::vector<double>* path = nullptr);

// Draws n terminal states from the standard-normal prior and runs each down
// the grid; sample s uses rng.child(s), so rows are order-independent.
// Writes n x d row-major into out (resized).
void generate_samples(const Model& model, const TimeGrid& grid,
                      const DiffusionSchedule& schedule,
                      const SamplerConfig& cfg, std::size_t n, Rng& rng,
                      std::vector<double>& out);

}  // namespace dflow
