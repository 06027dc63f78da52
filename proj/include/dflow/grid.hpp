#pragma once

#include <span>
#include <vector>

#include "dflow/rng.hpp"

namespace dflow {

// Discretization 0 = t_0 < t_1 < ... < t_N = T of the diffusion time axis.
class TimeGrid {
 public:
  // t_i = (i/N)^beta * T. beta < 1 shrinks steps toward t = T.
  static TimeGrid fixed(int steps, double horizon, double beta);

  // Endpoints pinned; interior node i drawn uniformly from
  // [((i-1)/(N-1))^beta * T, (i/(N-1))^beta * T], which keeps nodes sorted
  // with strictly positive steps. Requires steps >= 2.
  static TimeGrid flexible(int steps, double horizon, double beta, Rng& rng);

  // Grid with prescribed step sizes dt_i = deltas[i], starting at t_0 = 0.
  static TimeGrid from_deltas(std::span<const double> deltas);

  int steps() const { return static_cast<int>(times_.size()) - 1; }
  double horizon() const { return times_.back(); }
  double time(int i) const { return times_[static_cast<std::size_t>(i)]; }
  double dt(int i) const {
    return times_[static_cast<std::size_t>(i) + 1] - times_[static_cast<std::size_t>(i)];
  }
  std::span<const double> times() const { return times_; }

 private:
  explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {}
  std::vector<double> times_;
};

// Diffusion coefficient g sampled at grid nodes (g_i = g(t_i)) and at
// arbitrary times for continuous-time evaluation. The per-node values drive
// discrete steps; at_time interpolates linearly between nodes.
class DiffusionSchedule {
 public:
  static DiffusionSchedule constant(double g);
  // node_values[i] pairs with grid.time(i); sizes must match.
  static DiffusionSchedule per_node(const TimeGrid& grid,
                                    std::vector<double> node_values);

  double node(int i) const {
    return constant_ ? g_ : values_[static_cast<std::size_t>(i)];
  }
  double at_time(double t) const;
  bool is_constant() const { return constant_; }

 private:
  DiffusionSchedule() = default;
  bool constant_ = true;
  double g_ = 1.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

}  // namespace dflow
