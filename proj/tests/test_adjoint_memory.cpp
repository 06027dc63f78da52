// Heap discipline of the gradient hot path: once warmed up, a backward sweep
// must not allocate, no matter how many steps the trajectory has. Global
// new/delete are instrumented here, so this suite stays its own binary.
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <new>
#include <vector>

#include "dflow/adjoint.hpp"
#include "dflow/loss.hpp"
#include "dflow/model.hpp"
#include "dflow/sde.hpp"

namespace {

std::atomic<long long> g_tracked_bytes{0};
std::atomic<long long> g_tracked_calls{0};
std::atomic<bool> g_tracking{false};

void* counted_alloc(std::size_t size) {
  if (g_tracking.load(std::memory_order_relaxed)) {
    g_tracked_bytes.fetch_add(static_cast<long long>(size),
                              std::memory_order_relaxed);
    g_tracked_calls.fetch_add(1, std::memory_order_relaxed);
  }
  void* p = std::malloc(size == 0 ? 1 : size);
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

struct TrackScope {
  TrackScope() {
    g_tracked_bytes.store(0);
    g_tracked_calls.store(0);
    g_tracking.store(true);
  }
  ~TrackScope() { g_tracking.store(false); }
  long long bytes() const { return g_tracked_bytes.load(); }
  long long calls() const { return g_tracked_calls.load(); }
};

}  // namespace

void* operator new(std::size_t size) { return counted_alloc(size); }
void* operator new[](std::size_t size) { return counted_alloc(size); }
void operator delete(void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }
void operator delete[](void* p) noexcept { std::free(p); }
void operator delete[](void* p, std::size_t) noexcept { std::free(p); }

using namespace dflow;

namespace {

Model make_instance(int dim, std::uint64_t seed) {
  nn::MlpSpec spec;
  spec.input_dim = dim;
  spec.hidden_widths = {32, 32};
  spec.time_embed_dim = 16;
  Model m = make_model(ModelMode::diffflow, spec, spec, seed);
  Rng rng(Rng::derive_seed(seed, 7));
  std::vector<double> p(m.param_count());
  m.get_params(p);
  for (double& v : p) {
    if (v == 0.0) v = 0.05 * rng.normal();  // wake up the zero output layers
  }
  m.set_params(p);
  return m;
}

long long bytes_for_steps(const Model& model, int steps, AdjointWorkspace& ws,
                          std::vector<double>& grad) {
  TimeGrid grid = TimeGrid::fixed(steps, 1.0, 0.9);
  auto schedule = DiffusionSchedule::constant(1.0);
  std::vector<double> x0(static_cast<std::size_t>(model.dim()), 0.3);
  Rng rng(Rng::derive_seed(11, static_cast<std::uint64_t>(steps)));
  Trajectory traj = sample_forward_trajectory(*model.drift, x0, grid, schedule, rng);

  // Warm-up sizes every lazily grown buffer (adjoint scratch, field
  // workspaces) for this dimension.
  std::fill(grad.begin(), grad.end(), 0.0);
  adjoint_gradient(model, traj, schedule, grad, ws);

  TrackScope scope;
  for (int rep = 0; rep < 3; ++rep) {
    adjoint_gradient(model, traj, schedule, grad, ws);
  }
  return scope.bytes();
}

}  // namespace

TEST_CASE("warm backward sweeps allocate nothing, independent of step count") {
  Model m = make_instance(2, 21);
  AdjointWorkspace ws;
  std::vector<double> grad(m.param_count(), 0.0);

  long long bytes_8 = bytes_for_steps(m, 8, ws, grad);
  long long bytes_64 = bytes_for_steps(m, 64, ws, grad);
  long long bytes_512 = bytes_for_steps(m, 512, ws, grad);

  CAPTURE(bytes_8);
  CAPTURE(bytes_64);
  CAPTURE(bytes_512);
  CHECK(bytes_8 == bytes_64);
  CHECK(bytes_64 == bytes_512);
  CHECK(bytes_8 == 0);
}

TEST_CASE("adjoint scratch is sized by dimension, not step count") {
  Model m = make_instance(3, 5);
  AdjointWorkspace ws;
  std::vector<double> grad(m.param_count(), 0.0);
  auto schedule = DiffusionSchedule::constant(0.8);
  std::vector<double> x0 = {0.1, -0.2, 0.4};

  std::vector<std::size_t> sizes;
  for (int steps : {4, 128}) {
    TimeGrid grid = TimeGrid::fixed(steps, 0.7, 1.0);
    Rng rng(3);
    Trajectory traj = sample_forward_trajectory(*m.drift, x0, grid, schedule, rng);
    adjoint_gradient(m, traj, schedule, grad, ws);
    sizes.push_back(ws.noise_b.size() + ws.u.size() + ws.lam.size() +
                    ws.gx.size() + ws.cot.size() + ws.f_val.size() +
                    ws.s_val.size());
  }
  CHECK(sizes[0] == sizes[1]);
  CHECK(ws.sized_for == 3);
}

TEST_CASE("loss evaluation reuses trajectory-sized buffers only") {
  // The plain loss path may allocate (it returns per-step diagnostics), but
  // it must scale linearly and stay modest; this guards against accidental
  // quadratic blowups in reconstruction.
  Model m = make_instance(2, 9);
  auto schedule = DiffusionSchedule::constant(1.0);
  std::vector<double> x0 = {0.2, 0.2};

  auto bytes_for = [&](int steps) {
    TimeGrid grid = TimeGrid::fixed(steps, 1.0, 0.9);
    Rng rng(4);
    Trajectory traj = sample_forward_trajectory(*m.drift, x0, grid, schedule, rng);
    loss_for_trajectory(m, traj, schedule);  // warm-up outside the window
    TrackScope scope;
    loss_for_trajectory(m, traj, schedule);
    return scope.bytes();
  };
  long long small = bytes_for(16);
  long long large = bytes_for(256);
  CAPTURE(small);
  CAPTURE(large);
  CHECK(large <= 32 * std::max(small, 1LL));
}
