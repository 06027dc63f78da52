#include "dflow/nll.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "dflow/errors.hpp"
#include "dflow/loss.hpp"
#include "dflow/sde.hpp"
#include "dflow/vec.hpp"

namespace dflow {

OdeNllResult ode_nll(const Model& model, std::span<const double> x0,
                     const DiffusionSchedule& schedule, double horizon,
                     const OdeNllOptions& options) {
  const int d = model.dim();
  if (x0.size() != static_cast<std::size_t>(d)) {
    throw ContractError("ode_nll: point size does not match model dimension");
  }
  if (!(horizon > 0.0)) throw ConfigError("ode_nll: horizon must be > 0");

  const bool exact = d <= options.exact_trace_max_dim;
  const std::size_t n_probes =
      exact ? static_cast<std::size_t>(d)
            : static_cast<std::size_t>(options.hutchinson_probes);
  if (n_probes == 0) throw ConfigError("ode_nll: need at least one probe");

  // Rademacher probes are drawn once and reused at every time so the
  // divergence estimate is smooth along the integration.
  std::vector<double> probes(n_probes * static_cast<std::size_t>(d));
  if (exact) {
    for (std::size_t j = 0; j < n_probes; ++j) {
      probes[j * static_cast<std::size_t>(d) + j] = 1.0;
    }
  } else {
    Rng rng(Rng::derive_seed(options.probe_seed, 0x9b0be5eedULL));
    for (double& v : probes) v = rng.uniform_index(2) == 0 ? 1.0 : -1.0;
  }

  std::vector<double> f(static_cast<std::size_t>(d)),
      s(static_cast<std::size_t>(d)), gx(static_cast<std::size_t>(d));

  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    auto x = y.subspan(0, static_cast<std::size_t>(d));
    double g2 = schedule.at_time(t);
    g2 *= g2;
    model.drift->eval(x, t, f);
    model.score->eval(x, t, s);
    for (int c = 0; c < d; ++c) {
      std::size_t j = static_cast<std::size_t>(c);
      dy[j] = f[j] - 0.5 * g2 * s[j];
    }
    double trace = 0.0;
    for (std::size_t p = 0; p < n_probes; ++p) {
      auto v = std::span<const double>(probes).subspan(
          p * static_cast<std::size_t>(d), static_cast<std::size_t>(d));
      model.drift->vjp(x, t, v, gx, {});
      double vjv_f = exact ? gx[p] : dot(gx, v);
      model.score->vjp(x, t, v, gx, {});
      double vjv_s = exact ? gx[p] : dot(gx, v);
      trace += vjv_f - 0.5 * g2 * vjv_s;
    }
    dy[static_cast<std::size_t>(d)] =
        exact ? trace : trace / static_cast<double>(n_probes);
  };

  std::vector<double> y(static_cast<std::size_t>(d) + 1, 0.0);
  copy_to(x0, std::span<double>(y).subspan(0, static_cast<std::size_t>(d)));

  auto assemble = [&](OdeNllResult& r) {
    auto x_end =
        std::span<const double>(y).subspan(0, static_cast<std::size_t>(d));
    r.prior_term = 0.5 * squared_norm(x_end) +
                   0.5 * d * std::log(2.0 * std::numbers::pi);
    r.logdet_term = y[static_cast<std::size_t>(d)];
    r.nll = r.prior_term - r.logdet_term;
  };

  OdeNllResult result;
  try {
    result.stats = integrate_rk45(rhs, y, 0.0, horizon, options.ode);
  } catch (const NumericError& e) {
    // y still holds the last accepted state, so report how far we got.
    assemble(result);
    throw NumericError(std::string(e.what()) + "; best-effort nll " +
                       std::to_string(result.nll) + " nats");
  }
  assemble(result);
  return result;
}

ElboEstimate elbo_nll_bound(const Model& model, std::span<const double> x0,
                            const TimeGrid& grid,
                            const DiffusionSchedule& schedule, std::size_t n,
                            Rng& rng) {
  if (n == 0) throw ConfigError("elbo_nll_bound: need at least one trajectory");
  for (int i = 0; i <= grid.steps(); ++i) {
    if (!(schedule.node(i) > 0.0)) {
      throw ConfigError(
          "elbo_nll_bound: diffusion is zero at node " + std::to_string(i) +
          "; the bound is undefined there, use nf_mode_nll instead");
    }
  }
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng child = rng.child(i);
    Trajectory traj =
        sample_forward_trajectory(*model.drift, x0, grid, schedule, child);
    double value = loss_for_trajectory(model, traj, schedule).parts.nll_bound();
    double delta = value - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (value - mean);
  }
  ElboEstimate out;
  out.mean = mean;
  out.count = n;
  if (n > 1) {
    double var = m2 / static_cast<double>(n - 1);
    out.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

double bits_per_dim(double nats, int dim, double rescale_log_det) {
  if (dim < 1) throw ConfigError("bits_per_dim: dim must be >= 1");
  return (nats + rescale_log_det) /
         (static_cast<double>(dim) * std::numbers::ln2);
}

}  // namespace dflow
