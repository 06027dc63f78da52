#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dflow/errors.hpp"
#include "dflow/field.hpp"
#include "dflow/grid.hpp"
#include "dflow/rng.hpp"
#include "dflow/sde.hpp"

using namespace dflow;

TEST_CASE("fixed grid follows the power-law spacing") {
  TimeGrid g = TimeGrid::fixed(10, 2.0, 0.9);
  CHECK(g.steps() == 10);
  CHECK(g.time(0) == 0.0);
  CHECK(g.horizon() == 2.0);
  for (int i = 0; i < 10; ++i) CHECK(g.dt(i) > 0.0);
  CHECK(g.time(5) == doctest::Approx(std::pow(0.5, 0.9) * 2.0));
  // beta = 1 degenerates to uniform spacing
  TimeGrid u = TimeGrid::fixed(4, 1.0, 1.0);
  for (int i = 0; i < 4; ++i) CHECK(u.dt(i) == doctest::Approx(0.25));
  // beta < 1 makes steps shrink toward the horizon
  CHECK(g.dt(0) > g.dt(9));
}

TEST_CASE("fixed grid rejects bad arguments") {
  CHECK_THROWS_AS(TimeGrid::fixed(0, 1.0, 0.9), ConfigError);
  CHECK_THROWS_AS(TimeGrid::fixed(10, -1.0, 0.9), ConfigError);
  CHECK_THROWS_AS(TimeGrid::fixed(10, 1.0, 0.0), ConfigError);
}

TEST_CASE("flexible grid pins endpoints and stays sorted") {
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    TimeGrid g = TimeGrid::flexible(8, 1.5, 0.9, rng);
    CHECK(g.time(0) == 0.0);
    CHECK(g.horizon() == 1.5);
    for (int i = 0; i < 8; ++i) CHECK(g.dt(i) > 0.0);
  }
}

TEST_CASE("flexible grid draws interior nodes from abutting cells") {
  // steps=3, beta=1, T=1: t_1 ~ U[0, 1/2], t_2 ~ U[1/2, 1].
  Rng rng(17);
  double sum1 = 0.0;
  const int reps = 20000;
  for (int rep = 0; rep < reps; ++rep) {
    TimeGrid g = TimeGrid::flexible(3, 1.0, 1.0, rng);
    CHECK(g.time(1) <= 0.5);
    CHECK(g.time(2) >= 0.5);
    sum1 += g.time(1);
  }
  // E[t_1] = 1/4, sd of the mean ~ 0.5/sqrt(12 reps)
  CHECK(sum1 / reps == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("flexible grid is deterministic given the rng state") {
  Rng a(33), b(33);
  TimeGrid ga = TimeGrid::flexible(6, 1.0, 0.9, a);
  TimeGrid gb = TimeGrid::flexible(6, 1.0, 0.9, b);
  for (int i = 0; i <= 6; ++i) CHECK(ga.time(i) == gb.time(i));
}

TEST_CASE("from_deltas accumulates prescribed steps") {
  std::vector<double> deltas = {0.1, 0.2, 0.05};
  TimeGrid g = TimeGrid::from_deltas(deltas);
  CHECK(g.steps() == 3);
  CHECK(g.time(0) == 0.0);
  CHECK(g.time(1) == doctest::Approx(0.1));
  CHECK(g.time(3) == doctest::Approx(0.35));
  CHECK(g.dt(1) == doctest::Approx(0.2));
  std::vector<double> bad = {0.1, -0.2};
  CHECK_THROWS_AS(TimeGrid::from_deltas(bad), ConfigError);
  CHECK_THROWS_AS(TimeGrid::from_deltas(std::vector<double>{}), ConfigError);
}

TEST_CASE("diffusion schedules evaluate at nodes and between them") {
  DiffusionSchedule c = DiffusionSchedule::constant(0.7);
  CHECK(c.node(0) == 0.7);
  CHECK(c.node(12) == 0.7);
  CHECK(c.at_time(0.123) == 0.7);

  TimeGrid g = TimeGrid::fixed(2, 1.0, 1.0);  // nodes 0, 0.5, 1
  DiffusionSchedule s = DiffusionSchedule::per_node(g, {1.0, 2.0, 4.0});
  CHECK(s.node(1) == 2.0);
  CHECK(s.at_time(0.25) == doctest::Approx(1.5));
  CHECK(s.at_time(-1.0) == 1.0);
  CHECK(s.at_time(9.0) == 4.0);
  CHECK_THROWS_AS(DiffusionSchedule::per_node(g, {1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(DiffusionSchedule::constant(-1.0), ConfigError);
}

TEST_CASE("forward and backward steps do the stated arithmetic") {
  std::vector<double> x = {1.0, -2.0}, f = {0.5, 0.25}, s = {-1.0, 3.0};
  std::vector<double> noise = {0.2, -0.4}, out(2);
  forward_step(x, f, 2.0, 0.25, noise, out);
  CHECK(out[0] == doctest::Approx(1.0 + 0.5 * 0.25 + 2.0 * 0.5 * 0.2));
  CHECK(out[1] == doctest::Approx(-2.0 + 0.25 * 0.25 + 2.0 * 0.5 * -0.4));
  backward_step(x, f, s, 2.0, 0.25, noise, out);
  // x - (f - g^2 s) dt + g sqrt(dt) noise
  CHECK(out[0] == doctest::Approx(1.0 - (0.5 - 4.0 * -1.0) * 0.25 + 1.0 * 0.2));
  CHECK(out[1] == doctest::Approx(-2.0 - (0.25 - 4.0 * 3.0) * 0.25 + 1.0 * -0.4));
}

TEST_CASE("zero diffusion reduces the forward path to explicit Euler") {
  LinearScaleField drift(2, -0.5);
  TimeGrid grid = TimeGrid::fixed(64, 1.0, 1.0);
  DiffusionSchedule sched = DiffusionSchedule::constant(0.0);
  Rng rng(7);
  std::vector<double> x0 = {2.0, -1.0};
  Trajectory traj = sample_forward_trajectory(drift, x0, grid, sched, rng);
  std::vector<double> x = x0;
  for (int i = 0; i < 64; ++i) {
    for (auto& v : x) v += -0.5 * v * grid.dt(i);
  }
  CHECK(traj.state(64)[0] == doctest::Approx(x[0]).epsilon(1e-14));
  CHECK(traj.state(64)[1] == doctest::Approx(x[1]).epsilon(1e-14));
}

TEST_CASE("pure diffusion accumulates Brownian variance close to T") {
  ZeroField drift(1);
  TimeGrid grid = TimeGrid::fixed(32, 0.8, 0.9);
  DiffusionSchedule sched = DiffusionSchedule::constant(1.0);
  Rng rng(11);
  const int n = 20000;
  double sum_sq = 0.0;
  std::vector<double> x0 = {0.0};
  for (int i = 0; i < n; ++i) {
    Rng child = rng.child(static_cast<std::uint64_t>(i));
    Trajectory traj = sample_forward_trajectory(drift, x0, grid, sched, child);
    sum_sq += traj.state(32)[0] * traj.state(32)[0];
  }
  double var = sum_sq / n;
  // Var[x_T] = T exactly for Euler with additive noise; 5 sigma MC band.
  CHECK(std::abs(var - 0.8) < 5.0 * 0.8 * std::sqrt(2.0 / n));
}

TEST_CASE("forward trajectories are deterministic in the seed") {
  LinearScaleField drift(3, -0.5);
  TimeGrid grid = TimeGrid::fixed(16, 0.5, 0.9);
  DiffusionSchedule sched = DiffusionSchedule::constant(1.0);
  std::vector<double> x0 = {0.1, 0.2, 0.3};
  Rng a(99), b(99);
  Trajectory ta = sample_forward_trajectory(drift, x0, grid, sched, a);
  Trajectory tb = sample_forward_trajectory(drift, x0, grid, sched, b);
  CHECK(ta.states == tb.states);
  CHECK(ta.fwd_noise == tb.fwd_noise);
}

TEST_CASE("non-finite initial states are rejected") {
  ZeroField drift(2);
  TimeGrid grid = TimeGrid::fixed(4, 1.0, 1.0);
  DiffusionSchedule sched = DiffusionSchedule::constant(1.0);
  Rng rng(1);
  std::vector<double> x0 = {std::nan(""), 0.0};
  CHECK_THROWS_AS(sample_forward_trajectory(drift, x0, grid, sched, rng),
                  NumericError);
}

TEST_CASE("reconstructed backward noise inverts the backward step exactly") {
  nn::MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden_widths = {16};
  spec.time_embed_dim = 8;
  MlpField drift = MlpField::init(spec, 100);
  MlpField score = MlpField::init(spec, 101);
  // randomize the zero-initialized output layers so the fields are non-trivial
  {
    nn::ParamVector pd = drift.param_vector();
    nn::ParamVector ps = score.param_vector();
    Rng r(102);
    r.fill_uniform(pd.segment("out.weight"), -0.4, 0.4);
    r.fill_uniform(ps.segment("out.weight"), -0.4, 0.4);
    drift.set_params(pd.values());
    score.set_params(ps.values());
  }
  TimeGrid grid = TimeGrid::fixed(20, 1.0, 0.9);
  DiffusionSchedule sched = DiffusionSchedule::constant(0.8);
  Rng rng(103);
  std::vector<double> x0 = {0.5, -0.25};
  Trajectory traj = sample_forward_trajectory(drift, x0, grid, sched, rng);
  std::vector<double> noise_b(20 * 2);
  reconstruct_backward_noise(drift, score, traj, sched, noise_b);

  std::vector<double> f(2), s(2), x_prev(2);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    double t_next = grid.time(i + 1);
    drift.eval(traj.state(i + 1), t_next, f);
    score.eval(traj.state(i + 1), t_next, s);
    backward_step(traj.state(i + 1), f, s, sched.node(i + 1), grid.dt(i),
                  std::span<const double>(noise_b).subspan(i * 2, 2), x_prev);
    for (int k = 0; k < 2; ++k) {
      worst = std::max(worst, std::abs(x_prev[k] - traj.state(i)[k]));
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("with zero fields the backward noise is the negated forward noise") {
  ZeroField drift(2);
  ZeroField score(2);
  TimeGrid grid = TimeGrid::fixed(12, 1.0, 0.9);
  DiffusionSchedule sched = DiffusionSchedule::constant(1.3);
  Rng rng(7);
  std::vector<double> x0 = {1.0, 2.0};
  Trajectory traj = sample_forward_trajectory(drift, x0, grid, sched, rng);
  std::vector<double> noise_b(12 * 2);
  reconstruct_backward_noise(drift, score, traj, sched, noise_b);
  for (std::size_t i = 0; i < noise_b.size(); ++i) {
    CHECK(noise_b[i] == doctest::Approx(-traj.fwd_noise[i]).epsilon(1e-13));
  }
}

TEST_CASE("reconstruction requires positive diffusion") {
  ZeroField drift(1);
  ZeroField score(1);
  TimeGrid grid = TimeGrid::fixed(4, 1.0, 1.0);
  DiffusionSchedule pos = DiffusionSchedule::constant(1.0);
  Rng rng(3);
  std::vector<double> x0 = {0.0};
  Trajectory traj = sample_forward_trajectory(drift, x0, grid, pos, rng);
  DiffusionSchedule zero = DiffusionSchedule::constant(0.0);
  std::vector<double> noise_b(4);
  CHECK_THROWS_AS(
      reconstruct_backward_noise(drift, score, traj, zero, noise_b),
      NumericError);
}

TEST_CASE("trajectory csv dump has one row per node") {
  ZeroField drift(2);
  TimeGrid grid = TimeGrid::fixed(3, 1.0, 1.0);
  DiffusionSchedule sched = DiffusionSchedule::constant(1.0);
  Rng rng(5);
  std::vector<double> x0 = {0.0, 0.0};
  Trajectory traj = sample_forward_trajectory(drift, x0, grid, sched, rng);
  auto path = std::filesystem::temp_directory_path() / "dflow_traj.csv";
  write_trajectory_csv(path, traj);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,t,x_1,x_2,noise_1,noise_2");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
  std::filesystem::remove(path);
}
