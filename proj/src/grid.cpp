#include "dflow/grid.hpp"

#include <algorithm>
#include <cmath>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

void check_grid_args(int steps, double horizon, double beta, int min_steps) {
  if (steps < min_steps) {
    throw ConfigError("time grid: steps must be >= " + std::to_string(min_steps));
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("time grid: horizon must be positive and finite");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ConfigError("time grid: beta must be positive and finite");
  }
}

}  // namespace

TimeGrid TimeGrid::fixed(int steps, double horizon, double beta) {
  check_grid_args(steps, horizon, beta, 1);
  std::vector<double> times(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    times[static_cast<std::size_t>(i)] =
        std::pow(static_cast<double>(i) / steps, beta) * horizon;
  }
  times[0] = 0.0;
  times.back() = horizon;
  return TimeGrid(std::move(times));
}

TimeGrid TimeGrid::flexible(int steps, double horizon, double beta, Rng& rng) {
  check_grid_args(steps, horizon, beta, 2);
  std::vector<double> times(static_cast<std::size_t>(steps) + 1);
  times[0] = 0.0;
  times.back() = horizon;
  int cells = steps - 1;
  for (int i = 1; i < steps; ++i) {
    double lo = std::pow(static_cast<double>(i - 1) / cells, beta) * horizon;
    double hi = std::pow(static_cast<double>(i) / cells, beta) * horizon;
    times[static_cast<std::size_t>(i)] = rng.uniform(lo, hi);
  }
  // Cells abut, so sampled nodes are already nondecreasing; ties have
  // probability zero but a degenerate draw would break dt > 0.
  for (int i = 0; i < steps; ++i) {
    if (!(times[static_cast<std::size_t>(i)] < times[static_cast<std::size_t>(i) + 1])) {
      throw NumericError("flexible grid: degenerate step at index " +
                         std::to_string(i));
    }
  }
  return TimeGrid(std::move(times));
}

TimeGrid TimeGrid::from_deltas(std::span<const double> deltas) {
  if (deltas.empty()) throw ConfigError("time grid: deltas must be non-empty");
  std::vector<double> times(deltas.size() + 1);
  times[0] = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0) || !std::isfinite(deltas[i])) {
      throw ConfigError("time grid: deltas must be positive and finite");
    }
    times[i + 1] = times[i] + deltas[i];
  }
  return TimeGrid(std::move(times));
}

DiffusionSchedule DiffusionSchedule::constant(double g) {
  if (!(g >= 0.0) || !std::isfinite(g)) {
    throw ConfigError("diffusion schedule: g must be finite and >= 0");
  }
  DiffusionSchedule s;
  s.constant_ = true;
  s.g_ = g;
  return s;
}

DiffusionSchedule DiffusionSchedule::per_node(const TimeGrid& grid,
                                              std::vector<double> node_values) {
  if (node_values.size() != grid.times().size()) {
    throw ConfigError("diffusion schedule: need one value per grid node");
  }
  for (double v : node_values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("diffusion schedule: values must be finite and >= 0");
    }
  }
  DiffusionSchedule s;
  s.constant_ = false;
  s.times_.assign(grid.times().begin(), grid.times().end());
  s.values_ = std::move(node_values);
  return s;
}

double DiffusionSchedule::at_time(double t) const {
  if (constant_) return g_;
  if (t <= times_.front()) return values_.front();
  if (t >= times_.back()) return values_.back();
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  std::size_t lo = hi - 1;
  double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

}  // namespace dflow
