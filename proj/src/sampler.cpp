#include "dflow/sampler.hpp"

#include <cmath>
#include <string>

#include "dflow/errors.hpp"
#include "dflow/vec.hpp"

namespace dflow {

void backward_lambda_step(std::span<const double> x,
                          std::span<const double> drift_at_x,
                          std::span<const double> score_at_x, double g,
                          double dt, double lambda,
                          std::span<const double> noise,
                          std::span<double> x_prev) {
  // At lambda = 1 both coefficients reduce to exactly g^2 and g sqrt(dt),
  // and the expression below mirrors backward_step term for term, so the
  // two functions agree bitwise there.
  double g2 = g * g;
  double c = 0.5 * (1.0 + lambda * lambda) * g2;
  double lam_root = lambda * (g * std::sqrt(dt));
  for (std::size_t k = 0; k < x.size(); ++k) {
    x_prev[k] = x[k] - (drift_at_x[k] - c * score_at_x[k]) * dt +
                lam_root * noise[k];
  }
}

void sample_backward_path(const Model& model, const TimeGrid& grid,
                          const DiffusionSchedule& schedule,
                          const SamplerConfig& cfg, Rng& rng,
                          std::span<double> x, std::vector<double>* path) {
  int d = model.dim();
  if (x.size() != static_cast<std::size_t>(d)) {
    throw ContractError("sample_backward_path: state size mismatch");
  }
  int n = grid.steps();
  if (path) {
    path->assign(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(d),
                 0.0);
    copy_to(x, row(*path, static_cast<std::size_t>(d), static_cast<std::size_t>(n)));
  }

  std::vector<double> f(static_cast<std::size_t>(d)),
      s(static_cast<std::size_t>(d)), noise(static_cast<std::size_t>(d)),
      x_prev(static_cast<std::size_t>(d));

  for (int i = n - 1; i >= 0; --i) {
    double t_next = grid.time(i + 1);
    double dt = grid.dt(i);
    double g = schedule.node(i + 1);
    model.score->eval(x, t_next, s);
    if (i == 0 && cfg.tweedie_final) {
      double g1 = schedule.node(1);
      for (int c = 0; c < d; ++c) {
        std::size_t j = static_cast<std::size_t>(c);
        x_prev[j] = x[j] + g1 * g1 * grid.dt(0) * s[j];
      }
    } else {
      model.drift->eval(x, t_next, f);
      rng.fill_normal(noise);
      backward_lambda_step(x, f, s, g, dt, cfg.lambda, noise, x_prev);
    }
    if (!all_finite(x_prev)) {
      throw NumericError("sampler: non-finite state entering node " +
                         std::to_string(i));
    }
    copy_to(x_prev, x);
    if (path) {
      copy_to(x, row(*path, static_cast<std::size_t>(d), static_cast<std::size_t>(i)));
    }
  }
}

void generate_samples(const Model& model, const TimeGrid& grid,
                      const DiffusionSchedule& schedule,
                      const SamplerConfig& cfg, std::size_t n, Rng& rng,
                      std::vector<double>& out) {
  std::size_t d = static_cast<std::size_t>(model.dim());
  out.assign(n * d, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    Rng child = rng.child(s);
    auto x = row(out, d, s);
    child.fill_normal(x);
    sample_backward_path(model, grid, schedule, cfg, child, x);
  }
}

}  // namespace dflow
