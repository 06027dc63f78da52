#include "dflow/mlp.hpp"

#include <cmath>
#include <cstddef>

#include "dflow/errors.hpp"
#include "dflow/vec.hpp"

namespace dflow::nn {

namespace {

double silu(double z) { return z / (1.0 + std::exp(-z)); }

double silu_grad(double z) {
  double s = 1.0 / (1.0 + std::exp(-z));
  return s * (1.0 + z * (1.0 - s));
}

// y = W x with W row-major (rows x cols).
void matvec(std::span<const double> w, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot(w.subspan(r * cols, cols), x);
  }
}

// y = W^T g over the first `cols` entries of y.
void matvec_transpose(std::span<const double> w, std::size_t rows,
                      std::size_t cols, std::span<const double> g,
                      std::span<double> y) {
  fill(y.subspan(0, cols), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    axpy(g[r], w.subspan(r * cols, cols), y.subspan(0, cols));
  }
}

// grad_W += g outer x, row-major.
void accumulate_outer(std::span<double> grad_w, std::size_t rows,
                      std::size_t cols, std::span<const double> g,
                      std::span<const double> x) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy(g[r], x, grad_w.subspan(r * cols, cols));
  }
}

void time_embedding(std::size_t e, std::span<const double> freq,
                    std::span<const double> phase, double t,
                    std::span<double> emb) {
  std::size_t half = e / 2;
  for (std::size_t k = 0; k < e; ++k) {
    double a = freq[k] * t + phase[k];
    emb[k] = k < half ? std::sin(a) : std::cos(a);
  }
}

// Shared forward sweep caching pre-activations and activations in ws.
void forward_cached(const MlpSpec& spec, std::span<const double> p,
                    std::span<const double> x, double t, MlpWorkspace& ws) {
  std::size_t d = static_cast<std::size_t>(spec.input_dim);
  std::size_t e = static_cast<std::size_t>(spec.time_embed_dim);
  time_embedding(e, p.subspan(ws.freq, e), p.subspan(ws.phase, e), t, ws.emb);
  matvec(p.subspan(ws.x_proj, e * d), e, d, x, ws.act[0]);
  for (std::size_t k = 0; k < e; ++k) ws.act[0][k] += ws.emb[k];
  std::size_t prev = e;
  for (std::size_t i = 0; i < spec.hidden_widths.size(); ++i) {
    std::size_t w = static_cast<std::size_t>(spec.hidden_widths[i]);
    auto weight = p.subspan(ws.hid_w[i], w * prev);
    auto bias = p.subspan(ws.hid_b[i], w);
    matvec(weight, w, prev, ws.act[i], ws.pre[i]);
    for (std::size_t r = 0; r < w; ++r) {
      ws.pre[i][r] += bias[r];
      ws.act[i + 1][r] = silu(ws.pre[i][r]);
    }
    prev = w;
  }
}

}  // namespace

void MlpSpec::validate() const {
  if (input_dim < 1) throw ConfigError("MlpSpec: input_dim must be >= 1");
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0) {
    throw ConfigError("MlpSpec: time_embed_dim must be even and >= 2");
  }
  for (int w : hidden_widths) {
    if (w < 1) throw ConfigError("MlpSpec: hidden widths must be >= 1");
  }
}

std::size_t MlpSpec::param_count() const {
  // Kept arithmetic (not layout-derived) so hot-path validation never
  // allocates; test_mlp pins it against the segment sizes.
  std::size_t d = static_cast<std::size_t>(input_dim);
  std::size_t e = static_cast<std::size_t>(time_embed_dim);
  std::size_t total = e * d + e + e;  // x projection, frequencies, phases
  std::size_t prev = e;
  for (int width : hidden_widths) {
    std::size_t w = static_cast<std::size_t>(width);
    total += w * prev + w;
    prev = w;
  }
  return total + d * prev + d;  // output layer
}

std::size_t Segment::size() const {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::vector<Segment> layout(const MlpSpec& spec) {
  std::vector<Segment> segs;
  std::size_t off = 0;
  auto push = [&](std::string name, std::vector<int> shape) {
    Segment s{std::move(name), off, std::move(shape)};
    off += s.size();
    segs.push_back(std::move(s));
  };
  int e = spec.time_embed_dim;
  int d = spec.input_dim;
  push("x_proj.weight", {e, d});
  push("time_embed.freq", {e});
  push("time_embed.phase", {e});
  int prev = e;
  for (std::size_t i = 0; i < spec.hidden_widths.size(); ++i) {
    int w = spec.hidden_widths[i];
    push("hidden" + std::to_string(i) + ".weight", {w, prev});
    push("hidden" + std::to_string(i) + ".bias", {w});
    prev = w;
  }
  push("out.weight", {d, prev});
  push("out.bias", {d});
  return segs;
}

ParamVector::ParamVector(std::vector<Segment> layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  std::size_t total = 0;
  for (const Segment& s : layout_) {
    if (s.offset != total) {
      throw ContractError("ParamVector: segments must be contiguous");
    }
    total += s.size();
  }
  if (total != values_.size()) {
    throw ContractError("ParamVector: layout size does not match value count");
  }
}

ParamVector ParamVector::zeros(std::vector<Segment> layout) {
  std::size_t total = 0;
  for (const Segment& s : layout) total += s.size();
  return ParamVector(std::move(layout), std::vector<double>(total, 0.0));
}

std::span<double> ParamVector::segment(std::string_view name) {
  for (const Segment& s : layout_) {
    if (s.name == name) {
      return std::span<double>(values_.data() + s.offset, s.size());
    }
  }
  throw ContractError("ParamVector: no segment named " + std::string(name));
}

std::span<const double> ParamVector::segment(std::string_view name) const {
  return const_cast<ParamVector*>(this)->segment(name);
}

bool ParamVector::has_segment(std::string_view name) const {
  for (const Segment& s : layout_) {
    if (s.name == name) return true;
  }
  return false;
}

ParamVector ParamVector::unflatten(std::vector<Segment> layout,
                                   std::vector<double> flat) {
  return ParamVector(std::move(layout), std::move(flat));
}

void MlpWorkspace::resize(const MlpSpec& spec) {
  std::size_t e = static_cast<std::size_t>(spec.time_embed_dim);
  std::size_t d = static_cast<std::size_t>(spec.input_dim);
  emb.assign(e, 0.0);
  std::size_t n_hidden = spec.hidden_widths.size();
  pre.assign(n_hidden, {});
  act.assign(n_hidden + 1, {});
  act[0].assign(e, 0.0);
  hid_w.assign(n_hidden, 0);
  hid_b.assign(n_hidden, 0);
  std::size_t widest = std::max(e, d);
  x_proj = 0;
  freq = x_proj + e * d;
  phase = freq + e;
  std::size_t off = phase + e;
  std::size_t prev = e;
  for (std::size_t i = 0; i < n_hidden; ++i) {
    std::size_t w = static_cast<std::size_t>(spec.hidden_widths[i]);
    pre[i].assign(w, 0.0);
    act[i + 1].assign(w, 0.0);
    hid_w[i] = off;
    off += w * prev;
    hid_b[i] = off;
    off += w;
    widest = std::max(widest, w);
    prev = w;
  }
  out_w = off;
  out_b = off + d * prev;
  g_a.assign(widest, 0.0);
  g_b.assign(widest, 0.0);
  sized_for = spec;
  valid = true;
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector p = ParamVector::zeros(layout(spec));
  Rng rng(seed);
  auto fan_in_uniform = [&](std::span<double> w, int fan_in) {
    double b = 1.0 / std::sqrt(static_cast<double>(fan_in));
    rng.fill_uniform(w, -b, b);
  };
  fan_in_uniform(p.segment("x_proj.weight"), spec.input_dim);
  for (double& f : p.segment("time_embed.freq")) {
    f = std::exp(rng.uniform(0.0, std::log(1e3)));
  }
  // phases stay zero
  int prev = spec.time_embed_dim;
  for (std::size_t i = 0; i < spec.hidden_widths.size(); ++i) {
    fan_in_uniform(p.segment("hidden" + std::to_string(i) + ".weight"), prev);
    prev = spec.hidden_widths[i];
  }
  // output layer stays zero so the initial field is identically zero
  return p;
}

void forward(const MlpSpec& spec, const ParamVector& params,
             std::span<const double> x, double t, std::span<double> out,
             MlpWorkspace& ws) {
  std::size_t d = static_cast<std::size_t>(spec.input_dim);
  if (x.size() != d || out.size() != d) {
    throw ContractError("mlp::forward: x/out size does not match input_dim");
  }
  if (params.size() != spec.param_count()) {
    throw ContractError("mlp::forward: params do not match spec");
  }
  ws.ensure(spec);
  auto p = params.values();
  forward_cached(spec, p, x, t, ws);
  std::size_t last = ws.act.back().size();
  matvec(p.subspan(ws.out_w, d * last), d, last, ws.act.back(), out);
  auto out_bias = p.subspan(ws.out_b, d);
  for (std::size_t r = 0; r < d; ++r) out[r] += out_bias[r];
}

void forward_batch(const MlpSpec& spec, const ParamVector& params,
                   std::span<const double> xs, std::size_t n, double t,
                   std::span<double> out, MlpWorkspace& ws) {
  std::size_t d = static_cast<std::size_t>(spec.input_dim);
  for (std::size_t i = 0; i < n; ++i) {
    forward(spec, params, xs.subspan(i * d, d), t, out.subspan(i * d, d), ws);
  }
}

void vjp(const MlpSpec& spec, const ParamVector& params,
         std::span<const double> x, double t, std::span<const double> cotangent,
         std::span<double> grad_x, ParamVector* grad_params, MlpWorkspace& ws) {
  std::size_t d = static_cast<std::size_t>(spec.input_dim);
  std::size_t e = static_cast<std::size_t>(spec.time_embed_dim);
  if (cotangent.size() != d) {
    throw ContractError("mlp::vjp: cotangent size does not match input_dim");
  }
  if (grad_params && grad_params->size() != params.size()) {
    throw ContractError("mlp::vjp: grad_params layout mismatch");
  }
  ws.ensure(spec);
  auto p = params.values();
  std::span<double> gp = grad_params ? grad_params->values() : std::span<double>{};
  forward_cached(spec, p, x, t, ws);

  std::size_t n_hidden = spec.hidden_widths.size();
  std::size_t last = ws.act.back().size();

  // Output layer. g_a becomes the cotangent w.r.t. the last activation.
  if (grad_params) {
    accumulate_outer(gp.subspan(ws.out_w, d * last), d, last, cotangent,
                     ws.act.back());
    axpy(1.0, cotangent, gp.subspan(ws.out_b, d));
  }
  matvec_transpose(p.subspan(ws.out_w, d * last), d, last, cotangent, ws.g_a);

  for (std::size_t i = n_hidden; i-- > 0;) {
    std::size_t w = static_cast<std::size_t>(spec.hidden_widths[i]);
    std::size_t in_w = i == 0 ? e : static_cast<std::size_t>(spec.hidden_widths[i - 1]);
    for (std::size_t r = 0; r < w; ++r) ws.g_a[r] *= silu_grad(ws.pre[i][r]);
    auto g = std::span<const double>(ws.g_a.data(), w);
    if (grad_params) {
      accumulate_outer(gp.subspan(ws.hid_w[i], w * in_w), w, in_w, g, ws.act[i]);
      axpy(1.0, g, gp.subspan(ws.hid_b[i], w));
    }
    matvec_transpose(p.subspan(ws.hid_w[i], w * in_w), w, in_w, g, ws.g_b);
    std::swap(ws.g_a, ws.g_b);
  }

  // Input stage: g_a holds the cotangent w.r.t. u = x_proj x + emb(t).
  auto g_u = std::span<const double>(ws.g_a.data(), e);
  if (grad_params) {
    accumulate_outer(gp.subspan(ws.x_proj, e * d), e, d, g_u, x);
    auto freq = p.subspan(ws.freq, e);
    auto phase = p.subspan(ws.phase, e);
    auto grad_freq = gp.subspan(ws.freq, e);
    auto grad_phase = gp.subspan(ws.phase, e);
    std::size_t half = e / 2;
    for (std::size_t k = 0; k < e; ++k) {
      double a = freq[k] * t + phase[k];
      double da = k < half ? std::cos(a) : -std::sin(a);
      grad_freq[k] += g_u[k] * da * t;
      grad_phase[k] += g_u[k] * da;
    }
  }
  if (!grad_x.empty()) {
    if (grad_x.size() != d) {
      throw ContractError("mlp::vjp: grad_x size does not match input_dim");
    }
    matvec_transpose(p.subspan(ws.x_proj, e * d), e, d, g_u, grad_x);
  }
}

}  // namespace dflow::nn
