#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "dflow/field.hpp"
#include "dflow/grid.hpp"
#include "dflow/model.hpp"
#include "dflow/rng.hpp"
#include "dflow/vec.hpp"

namespace dflow {

// One Euler-Maruyama forward path: states at every grid node plus the
// standard-normal increments that produced them.
struct Trajectory {
  TimeGrid grid;
  int dim = 0;
  std::vector<double> states;     // (steps+1) x dim, row-major
  std::vector<double> fwd_noise;  // steps x dim

  std::span<double> state(int i) {
    return row(states, static_cast<std::size_t>(dim), static_cast<std::size_t>(i));
  }
  std::span<const double> state(int i) const {
    return row(states, static_cast<std::size_t>(dim), static_cast<std::size_t>(i));
  }
  std::span<double> noise(int i) {
    return row(fwd_noise, static_cast<std::size_t>(dim), static_cast<std::size_t>(i));
  }
  std::span<const double> noise(int i) const {
    return row(fwd_noise, static_cast<std::size_t>(dim), static_cast<std::size_t>(i));
  }
};

// x_next = x + f(x, t) dt + g sqrt(dt) noise. `drift_at_x` is f already
// evaluated at (x, t); callers that batch field evaluations reuse it.
void forward_step(std::span<const double> x, std::span<const double> drift_at_x,
                  double g, double dt, std::span<const double> noise,
                  std::span<double> x_next);

// x_prev = x - [f(x, t) - g^2 s(x, t)] dt + g sqrt(dt) noise, with f and s
// evaluated at the step's right endpoint (the newer time).
void backward_step(std::span<const double> x, std::span<const double> drift_at_x,
                   std::span<const double> score_at_x, double g, double dt,
                   std::span<const double> noise, std::span<double> x_prev);

// Simulates x_0 -> x_N over the grid, drawing one d-dimensional standard
// normal per step. Throws NumericError naming the step if states go
// non-finite. g == 0 degenerates to explicit Euler.
Trajectory sample_forward_trajectory(const VectorField& drift,
                                     std::span<const double> x0,
                                     const TimeGrid& grid,
                                     const DiffusionSchedule& schedule,
                                     Rng& rng);

// Noise the backward kernel must have produced for this path:
//   noise_b[i] = (x_i - x_{i+1} + (f - g^2 s)(x_{i+1}, t_{i+1}) dt_i)
//                / (g_{i+1} sqrt(dt_i)).
// Requires g > 0 at every interior node used; throws NumericError naming the
// step otherwise. Writes steps x dim into `out`.
void reconstruct_backward_noise(const VectorField& drift,
                                const VectorField& score, const Trajectory& traj,
                                const DiffusionSchedule& schedule,
                                std::span<double> out);

// CSV dump: header step,t,x_1..x_d,noise_1..noise_d; the final node has no
// outgoing increment so its noise cells are left empty.
void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& traj);

}  // namespace dflow
