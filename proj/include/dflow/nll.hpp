#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "dflow/grid.hpp"
#include "dflow/model.hpp"
#include "dflow/ode.hpp"
#include "dflow/rng.hpp"

namespace dflow {

struct OdeNllOptions {
  OdeOptions ode;              // defaults: atol = rtol = 1e-5
  int exact_trace_max_dim = 8; // exact divergence up to this dimension
  int hutchinson_probes = 16;  // used above it
  std::uint64_t probe_seed = 0;
};

struct OdeNllResult {
  double nll = 0.0;         // nats
  double prior_term = 0.0;  // -log N(x_T; 0, I)
  double logdet_term = 0.0; // integrated divergence along the path
  OdeStats stats;
};

// Exact (deterministic-flow) negative log likelihood of one point:
// integrates dx/dt = f - 1/2 g^2 s together with the divergence of that
// field from 0 to `horizon`, then
//   nll = -log N(x_T; 0, I) - integral of divergence.
// Dimensions up to exact_trace_max_dim get an exact trace from one
// cotangent probe per coordinate; larger systems use Hutchinson sign-probe
// estimates with probes fixed across the whole integration (an unbiased
// estimator; set probe_seed to vary it).
OdeNllResult ode_nll(const Model& model, std::span<const double> x0,
                     const DiffusionSchedule& schedule, double horizon,
                     const OdeNllOptions& options = {});

struct ElboEstimate {
  double mean = 0.0;       // nats; upper bound on the NLL in expectation
  double std_error = 0.0;  // Monte Carlo standard error of the mean
  std::size_t count = 0;
};

// Averages the trajectory bound over n forward simulations from one point;
// trajectory s draws from rng.child(s).
ElboEstimate elbo_nll_bound(const Model& model, std::span<const double> x0,
                            const TimeGrid& grid,
                            const DiffusionSchedule& schedule, std::size_t n,
                            Rng& rng);

// Converts nats in normalized space to bits per dimension in the original
// units; rescale_log_det is the sum of log standard deviations used by the
// normalization (0 when none).
double bits_per_dim(double nats, int dim, double rescale_log_det = 0.0);

}  // namespace dflow
