#include <doctest.h>

#include <cmath>
#include <vector>

#include "dflow/errors.hpp"
#include "dflow/ode.hpp"

using namespace dflow;

TEST_CASE("exponential decay integrates to machine-near accuracy") {
  auto rhs = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = -y[0];
  };
  std::vector<double> y = {1.0};
  OdeOptions opts;
  opts.atol = opts.rtol = 1e-10;
  OdeStats stats = integrate_rk45(rhs, y, 0.0, 1.0, opts);
  CHECK(std::abs(y[0] - std::exp(-1.0)) < 1e-9);
  CHECK(stats.accepted > 0);
  // FSAL: six fresh evaluations per attempted step plus the initial slope.
  CHECK(stats.rhs_evals == 6 * (stats.accepted + stats.rejected) + 1);
}

TEST_CASE("backward integration inverts forward integration") {
  auto rhs = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = -y[0];
  };
  std::vector<double> y = {1.0};
  OdeOptions opts;
  opts.atol = opts.rtol = 1e-9;
  integrate_rk45(rhs, y, 0.0, 2.0, opts);
  integrate_rk45(rhs, y, 2.0, 0.0, opts);
  CHECK(std::abs(y[0] - 1.0) < 1e-7);
}

TEST_CASE("harmonic oscillator returns after one period") {
  auto rhs = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  std::vector<double> y = {1.0, 0.0};
  OdeOptions opts;
  opts.atol = opts.rtol = 1e-8;
  integrate_rk45(rhs, y, 0.0, 2.0 * M_PI, opts);
  CHECK(std::abs(y[0] - 1.0) < 1e-6);
  CHECK(std::abs(y[1]) < 1e-6);
}

TEST_CASE("time-dependent polynomial right-hand side is integrated") {
  // y' = 3 t^2 with y(0) = 0 gives y(T) = T^3; a 5th-order scheme yields
  // near-roundoff accuracy regardless of the step sequence.
  auto rhs = [](double t, std::span<const double>, std::span<double> dy) {
    dy[0] = 3.0 * t * t;
  };
  std::vector<double> y = {0.0};
  integrate_rk45(rhs, y, 0.0, 2.0, {});
  CHECK(std::abs(y[0] - 8.0) < 1e-10);
}

TEST_CASE("tighter tolerances give smaller error at more evaluations") {
  auto rhs = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[0] * std::sin(5.0 * y[0]);
  };
  auto run = [&](double tol, OdeStats& stats) {
    std::vector<double> y = {0.8};
    OdeOptions opts;
    opts.atol = opts.rtol = tol;
    stats = integrate_rk45(rhs, y, 0.0, 3.0, opts);
    return y[0];
  };
  OdeStats loose_stats, tight_stats, ref_stats;
  double loose = run(1e-4, loose_stats);
  double tight = run(1e-8, tight_stats);
  double ref = run(1e-12, ref_stats);
  CHECK(std::abs(tight - ref) < std::abs(loose - ref) + 1e-14);
  CHECK(tight_stats.rhs_evals > loose_stats.rhs_evals);
}

TEST_CASE("zero-length spans are a no-op") {
  auto rhs = [](double, std::span<const double>, std::span<double> dy) {
    dy[0] = 1.0;
  };
  std::vector<double> y = {4.0};
  OdeStats stats = integrate_rk45(rhs, y, 1.0, 1.0, {});
  CHECK(y[0] == 4.0);
  CHECK(stats.rhs_evals == 0);
}

TEST_CASE("failure modes raise typed errors") {
  std::vector<double> y = {1.0};

  auto nan_rhs = [](double, std::span<const double>, std::span<double> dy) {
    dy[0] = std::nan("");
  };
  CHECK_THROWS_AS(integrate_rk45(nan_rhs, y, 0.0, 1.0, {}), NumericError);

  auto stiff_rhs = [](double, std::span<const double> y_, std::span<double> dy) {
    dy[0] = 1e6 * std::cos(1e6 * y_[0]);
  };
  OdeOptions tiny_budget;
  tiny_budget.max_steps = 5;
  y = {0.3};
  CHECK_THROWS_AS(integrate_rk45(stiff_rhs, y, 0.0, 10.0, tiny_budget),
                  NumericError);

  OdeOptions bad_tol;
  bad_tol.atol = 0.0;
  y = {1.0};
  auto ok_rhs = [](double, std::span<const double>, std::span<double> dy) {
    dy[0] = 0.0;
  };
  CHECK_THROWS_AS(integrate_rk45(ok_rhs, y, 0.0, 1.0, bad_tol), ConfigError);
}
