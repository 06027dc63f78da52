#include "dflow/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dflow/errors.hpp"
#include "dflow/vec.hpp"

namespace dflow {

namespace {

// Dormand-Prince 5(4) tableau. The 5th-order weights equal the last stage
// row, so the final stage evaluation doubles as the first stage of the next
// step (FSAL).
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
// Difference between the 5th- and embedded 4th-order weights.
constexpr double kE[7] = {71.0 / 57600,     0.0,        -71.0 / 16695,
                          71.0 / 1920,      -17253.0 / 339200,
                          22.0 / 525,       -1.0 / 40};

double scaled_rms(std::span<const double> err, std::span<const double> y0,
                  std::span<const double> y1, double atol, double rtol) {
  double acc = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    double scale = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    double r = err[i] / scale;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace

OdeStats integrate_rk45(const OdeRhs& rhs, std::span<double> y, double t0,
                        double t1, const OdeOptions& options) {
  if (!(options.atol > 0.0) || !(options.rtol > 0.0)) {
    throw ConfigError("ode: tolerances must be positive");
  }
  const std::size_t n = y.size();
  const double span = t1 - t0;
  if (span == 0.0) return {};
  const double dir = span > 0.0 ? 1.0 : -1.0;

  OdeStats stats;
  std::vector<std::vector<double>> k(7, std::vector<double>(n));
  std::vector<double> y_stage(n), y_new(n), err(n);

  auto eval = [&](double t, std::span<const double> state, std::span<double> out) {
    rhs(t, state, out);
    ++stats.rhs_evals;
    if (!all_finite(out)) {
      throw NumericError("ode: right-hand side returned non-finite values at t = " +
                         std::to_string(t));
    }
  };

  double t = t0;
  eval(t, y, k[0]);

  // Initial step from the ratio of the state and slope scales.
  double h;
  if (options.initial_dt > 0.0) {
    h = std::min(options.initial_dt, std::abs(span));
  } else {
    double d0 = scaled_rms(y, y, y, options.atol, options.rtol);
    double d1 = scaled_rms(k[0], y, y, options.atol, options.rtol);
    h = (d0 > 1e-10 && d1 > 1e-10) ? 0.01 * d0 / d1 : 1e-4 * std::abs(span);
    h = std::min(h, std::abs(span));
  }
  const double h_floor = options.min_dt * std::abs(span);

  while (dir * (t1 - t) > 0.0) {
    h = std::min(h, std::abs(t1 - t));
    if (h < h_floor) {
      throw NumericError("ode: step size underflow at t = " + std::to_string(t));
    }
    double hs = dir * h;

    for (int stage = 1; stage < 7; ++stage) {
      copy_to(y, y_stage);
      for (int j = 0; j < stage; ++j) {
        axpy(hs * kA[stage][j], k[static_cast<std::size_t>(j)],
             std::span<double>(y_stage));
      }
      eval(t + kC[stage] * hs, y_stage,
           k[static_cast<std::size_t>(stage)]);
    }
    // Stage 7 was evaluated at y + h * (5th-order increment), i.e. y_new.
    copy_to(y_stage, y_new);

    fill(err, 0.0);
    for (int j = 0; j < 7; ++j) {
      axpy(hs * kE[j], k[static_cast<std::size_t>(j)], std::span<double>(err));
    }
    // Error budget proportional to the fraction of the span this step
    // covers, so the accumulated error tracks the tolerances and not the
    // step count. With local error ~ h^5 the ratio scales as h^4, hence
    // the -1/4 controller exponent.
    double e = scaled_rms(err, y, y_new, options.atol, options.rtol) *
               std::abs(span) / h;

    if (e <= 1.0) {
      t += hs;
      copy_to(y_new, y);
      std::swap(k[0], k[6]);  // FSAL: reuse the last stage as the next first
      ++stats.accepted;
    } else {
      ++stats.rejected;
    }
    double factor = 0.9 * std::pow(std::max(e, 1e-10), -0.25);
    h *= std::clamp(factor, 0.2, 5.0);

    if (stats.accepted + stats.rejected > options.max_steps) {
      throw NumericError("ode: exceeded " + std::to_string(options.max_steps) +
                         " steps at t = " + std::to_string(t));
    }
  }
  return stats;
}

}  // namespace dflow
