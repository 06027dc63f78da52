#include "dflow/sde.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "dflow/errors.hpp"

namespace dflow {

void forward_step(std::span<const double> x, std::span<const double> drift_at_x,
                  double g, double dt, std::span<const double> noise,
                  std::span<double> x_next) {
  double root = g * std::sqrt(dt);
  for (std::size_t k = 0; k < x.size(); ++k) {
    x_next[k] = x[k] + drift_at_x[k] * dt + root * noise[k];
  }
}

void backward_step(std::span<const double> x, std::span<const double> drift_at_x,
                   std::span<const double> score_at_x, double g, double dt,
                   std::span<const double> noise, std::span<double> x_prev) {
  double g2 = g * g;
  double root = g * std::sqrt(dt);
  for (std::size_t k = 0; k < x.size(); ++k) {
    x_prev[k] = x[k] - (drift_at_x[k] - g2 * score_at_x[k]) * dt + root * noise[k];
  }
}

Trajectory sample_forward_trajectory(const VectorField& drift,
                                     std::span<const double> x0,
                                     const TimeGrid& grid,
                                     const DiffusionSchedule& schedule,
                                     Rng& rng) {
  int d = drift.dim();
  if (x0.size() != static_cast<std::size_t>(d)) {
    throw ContractError("sample_forward_trajectory: x0 dim mismatch");
  }
  if (!all_finite(x0)) {
    throw NumericError("forward trajectory: non-finite initial state");
  }
  int n = grid.steps();
  Trajectory traj{grid, d,
                  std::vector<double>(static_cast<std::size_t>(n + 1) * d),
                  std::vector<double>(static_cast<std::size_t>(n) * d)};
  copy_to(x0, traj.state(0));
  std::vector<double> f(static_cast<std::size_t>(d));
  for (int i = 0; i < n; ++i) {
    rng.fill_normal(traj.noise(i));
    drift.eval(traj.state(i), grid.time(i), f);
    forward_step(traj.state(i), f, schedule.node(i), grid.dt(i), traj.noise(i),
                 traj.state(i + 1));
    if (!all_finite(traj.state(i + 1))) {
      throw NumericError("forward trajectory diverged at step " +
                         std::to_string(i));
    }
  }
  return traj;
}

void reconstruct_backward_noise(const VectorField& drift,
                                const VectorField& score, const Trajectory& traj,
                                const DiffusionSchedule& schedule,
                                std::span<double> out) {
  int d = traj.dim;
  int n = traj.grid.steps();
  if (out.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(d)) {
    throw ContractError("reconstruct_backward_noise: out size mismatch");
  }
  std::vector<double> f(static_cast<std::size_t>(d)), s(static_cast<std::size_t>(d));
  for (int i = 0; i < n; ++i) {
    double g = schedule.node(i + 1);
    double dt = traj.grid.dt(i);
    if (!(g > 0.0)) {
      throw NumericError("backward noise reconstruction needs g > 0 at node " +
                         std::to_string(i + 1));
    }
    double t_next = traj.grid.time(i + 1);
    auto x_next = traj.state(i + 1);
    auto x = traj.state(i);
    drift.eval(x_next, t_next, f);
    score.eval(x_next, t_next, s);
    double inv = 1.0 / (g * std::sqrt(dt));
    double g2 = g * g;
    auto row_out = out.subspan(static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      row_out[static_cast<std::size_t>(k)] =
          inv * (x[static_cast<std::size_t>(k)] - x_next[static_cast<std::size_t>(k)] +
                 (f[static_cast<std::size_t>(k)] - g2 * s[static_cast<std::size_t>(k)]) * dt);
    }
    if (!all_finite(row_out)) {
      throw NumericError("backward noise reconstruction non-finite at step " +
                         std::to_string(i));
    }
  }
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  int d = traj.dim;
  out << "step,t";
  for (int k = 1; k <= d; ++k) out << ",x_" << k;
  for (int k = 1; k <= d; ++k) out << ",noise_" << k;
  out << "\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  int n = traj.grid.steps();
  for (int i = 0; i <= n; ++i) {
    out << i;
    put(traj.grid.time(i));
    for (double v : traj.state(i)) put(v);
    if (i < n) {
      for (double v : traj.noise(i)) put(v);
    } else {
      for (int k = 0; k < d; ++k) out << ',';
    }
    out << "\n";
  }
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

}  // namespace dflow
