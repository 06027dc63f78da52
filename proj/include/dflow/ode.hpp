#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace dflow {

struct OdeOptions {
  double atol = 1e-5;
  double rtol = 1e-5;
  double initial_dt = 0.0;  // 0 picks a size from the tolerances
  double min_dt = 1e-12;    // relative to the span; underflow is an error
  std::size_t max_steps = 200000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

// Right-hand side dy/dt = rhs(t, y); writes into the last argument.
using OdeRhs =
    std::function<void(double, std::span<const double>, std::span<double>)>;

// Adaptive Dormand-Prince 5(4) integration of y from t0 to t1 (either
// direction), in place. A step of size h is accepted when the mixed norm
//   rms_i( e_i / (atol + rtol * max(|y_i|, |y_new_i|)) ) <= h / |t1 - t0|,
// i.e. the local error budget is spent proportionally to time covered, so
// the accumulated error over the whole span tracks the tolerances (times
// the problem's error-growth factor) instead of the step count.
// Throws NumericError when the state goes non-finite, the step size
// underflows, or the step budget runs out.
OdeStats integrate_rk45(const OdeRhs& rhs, std::span<double> y, double t0,
                        double t1, const OdeOptions& options);

}  // namespace dflow
