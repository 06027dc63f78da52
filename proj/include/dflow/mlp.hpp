#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dflow/rng.hpp"

namespace dflow::nn {

// Architecture of a time-conditioned vector field R^d x [0,T] -> R^d.
//
// The input stage projects x linearly (no bias) to time_embed_dim lanes and
// adds a sinusoidal time embedding with learned frequencies and phases; the
// embedding plays the role of the input bias. A SiLU hidden stack follows,
// then an affine output layer back to d lanes. The output layer starts at
// zero so a freshly initialized field is identically zero.
struct MlpSpec {
  int input_dim = 2;
  std::vector<int> hidden_widths = {64, 64, 64};
  int time_embed_dim = 32;  // must be even

  // Throws ConfigError when dimensions are unusable. An empty hidden stack is
  // legal (embedding feeds the output layer directly); zero or negative
  // widths are not.
  void validate() const;

  std::size_t param_count() const;

  bool operator==(const MlpSpec&) const = default;
};

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::vector<int> shape;

  std::size_t size() const;

  bool operator==(const Segment&) const = default;
};

// Flat parameter storage plus named segment descriptors. The flat layout is
// the unit of optimizer updates, checkpoints, and gradient accumulation;
// segments give shaped, named access for inspection and I/O.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(std::vector<Segment> layout, std::vector<double> values);

  static ParamVector zeros(std::vector<Segment> layout);

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<Segment>& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;
  bool has_segment(std::string_view name) const;

  std::vector<double> flatten() const { return values_; }
  // Rebuilds a ParamVector from a flat buffer laid out per `layout`.
  // flatten/unflatten round-trip bit-exactly.
  static ParamVector unflatten(std::vector<Segment> layout,
                               std::vector<double> flat);

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<Segment> layout_;
  std::vector<double> values_;
};

// Reused scratch space so forward/vjp never allocate after the first call
// with a given spec. Also caches flat-parameter offsets so the hot path does
// no name lookups. One workspace per thread; calls with disjoint workspaces
// are safe to run concurrently.
struct MlpWorkspace {
  std::vector<double> emb;                  // time embedding, width E
  std::vector<std::vector<double>> pre;     // hidden pre-activations
  std::vector<std::vector<double>> act;     // act[0] = input stage output u
  std::vector<double> g_a, g_b;             // backprop scratch

  std::size_t x_proj = 0, freq = 0, phase = 0, out_w = 0, out_b = 0;
  std::vector<std::size_t> hid_w, hid_b;
  MlpSpec sized_for;
  bool valid = false;

  void resize(const MlpSpec& spec);
  void ensure(const MlpSpec& spec) {
    if (!valid || !(sized_for == spec)) resize(spec);
  }
};

std::vector<Segment> layout(const MlpSpec& spec);

// Fan-in scaled uniform weights, zero biases, log-uniform frequencies in
// [1, 1e3], zero phases, zero output layer. Deterministic in seed.
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

// out = MLP(x, t). Pure: identical inputs give bit-identical outputs.
void forward(const MlpSpec& spec, const ParamVector& params,
             std::span<const double> x, double t, std::span<double> out,
             MlpWorkspace& ws);

// Convenience row-major batch forward; row i of `out` equals forward() on
// row i of `xs`.
void forward_batch(const MlpSpec& spec, const ParamVector& params,
                   std::span<const double> xs, std::size_t n, double t,
                   std::span<double> out, MlpWorkspace& ws);

// Vector-Jacobian products of y = MLP(x, t) with cotangent c:
//   grad_x      <-  c^T dy/dx         (overwritten; pass empty to skip)
//   *grad_params +=  c^T dy/dtheta    (accumulated; pass nullptr to skip)
// grad_params must share the spec's layout.
void vjp(const MlpSpec& spec, const ParamVector& params,
         std::span<const double> x, double t, std::span<const double> cotangent,
         std::span<double> grad_x, ParamVector* grad_params, MlpWorkspace& ws);

}  // namespace dflow::nn
