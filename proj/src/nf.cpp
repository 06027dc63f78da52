#include "dflow/nf.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "dflow/errors.hpp"
#include "dflow/sde.hpp"
#include "dflow/vec.hpp"

namespace dflow {

namespace {

// log |det A| of a dense row-major d x d matrix by partial-pivot LU,
// in place. Returns NaN for a singular matrix.
double lu_log_abs_det(std::vector<double>& a, int d) {
  double log_det = 0.0;
  for (int col = 0; col < d; ++col) {
    int pivot = col;
    double best = std::abs(a[static_cast<std::size_t>(col) * d + col]);
    for (int r = col + 1; r < d; ++r) {
      double mag = std::abs(a[static_cast<std::size_t>(r) * d + col]);
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    if (!(best > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    if (pivot != col) {
      for (int c = 0; c < d; ++c) {
        std::swap(a[static_cast<std::size_t>(pivot) * d + c],
                  a[static_cast<std::size_t>(col) * d + c]);
      }
    }
    double diag = a[static_cast<std::size_t>(col) * d + col];
    log_det += std::log(std::abs(diag));
    for (int r = col + 1; r < d; ++r) {
      double factor = a[static_cast<std::size_t>(r) * d + col] / diag;
      a[static_cast<std::size_t>(r) * d + col] = 0.0;
      for (int c = col + 1; c < d; ++c) {
        a[static_cast<std::size_t>(r) * d + c] -=
            factor * a[static_cast<std::size_t>(col) * d + c];
      }
    }
  }
  return log_det;
}

}  // namespace

NfNllResult nf_mode_nll(const Model& model, std::span<const double> x0,
                        const TimeGrid& grid) {
  const int d = model.dim();
  if (x0.size() != static_cast<std::size_t>(d)) {
    throw ContractError("nf_mode_nll: point size does not match model dimension");
  }
  std::size_t dd = static_cast<std::size_t>(d);

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> f(dd), gx(dd), probe(dd), jac(dd * dd);

  NfNllResult result;
  for (int i = 0; i < grid.steps(); ++i) {
    double t = grid.time(i);
    double dt = grid.dt(i);

    // Row r of (I + dt J_f) from the cotangent probe e_r.
    for (int r = 0; r < d; ++r) {
      fill(probe, 0.0);
      probe[static_cast<std::size_t>(r)] = 1.0;
      model.drift->vjp(x, t, probe, gx, {});
      for (int c = 0; c < d; ++c) {
        jac[static_cast<std::size_t>(r) * dd + static_cast<std::size_t>(c)] =
            (r == c ? 1.0 : 0.0) + dt * gx[static_cast<std::size_t>(c)];
      }
    }
    double step_logdet = lu_log_abs_det(jac, d);
    if (!std::isfinite(step_logdet)) {
      throw NumericError("flow map is singular at step " + std::to_string(i));
    }
    result.logdet_sum += step_logdet;

    model.drift->eval(x, t, f);
    axpy(dt, f, std::span<double>(x));
    if (!all_finite(x)) {
      throw NumericError("flow state non-finite after step " + std::to_string(i));
    }
  }

  result.prior_term = 0.5 * squared_norm(x) +
                      0.5 * d * std::log(2.0 * std::numbers::pi);
  result.nll = result.prior_term - result.logdet_sum;
  return result;
}

}  // namespace dflow
