#include "dflow/selfcheck.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "dflow/adjoint.hpp"
#include "dflow/errors.hpp"
#include "dflow/rng.hpp"
#include "dflow/tape.hpp"
#include "dflow/vec.hpp"

namespace dflow::check {

namespace {

using Ids = std::vector<Tape::Id>;

Ids tape_mlp(Tape& t, const nn::MlpSpec& spec, std::span<const Tape::Id> params,
             std::span<const Tape::Id> x, double time) {
  std::size_t d = static_cast<std::size_t>(spec.input_dim);
  std::size_t e = static_cast<std::size_t>(spec.time_embed_dim);
  auto segs = nn::layout(spec);
  auto off = [&](const char* name) -> std::size_t {
    for (const auto& s : segs) {
      if (s.name == name) return s.offset;
    }
    throw ContractError("tape_mlp: missing segment");
  };

  // input stage u = W_x x + emb(t)
  std::size_t x_proj = off("x_proj.weight");
  std::size_t freq = off("time_embed.freq");
  std::size_t phase = off("time_embed.phase");
  Ids h(e);
  for (std::size_t r = 0; r < e; ++r) {
    Tape::Id a = t.add(t.mul_const(params[freq + r], time), params[phase + r]);
    Tape::Id emb = r < e / 2 ? t.sin(a) : t.cos(a);
    Tape::Id acc = emb;
    for (std::size_t c = 0; c < d; ++c) {
      acc = t.add(acc, t.mul(params[x_proj + r * d + c], x[c]));
    }
    h[r] = acc;
  }

  std::size_t prev = e;
  for (std::size_t i = 0; i < spec.hidden_widths.size(); ++i) {
    std::size_t w = static_cast<std::size_t>(spec.hidden_widths[i]);
    std::string base = "hidden" + std::to_string(i);
    std::size_t w_off = off((base + ".weight").c_str());
    std::size_t b_off = off((base + ".bias").c_str());
    Ids next(w);
    for (std::size_t r = 0; r < w; ++r) {
      Tape::Id z = params[b_off + r];
      for (std::size_t c = 0; c < prev; ++c) {
        z = t.add(z, t.mul(params[w_off + r * prev + c], h[c]));
      }
      next[r] = t.mul(z, t.sigmoid(z));  // silu
    }
    h = std::move(next);
    prev = w;
  }

  std::size_t out_w = off("out.weight");
  std::size_t out_b = off("out.bias");
  Ids y(d);
  for (std::size_t r = 0; r < d; ++r) {
    Tape::Id z = params[out_b + r];
    for (std::size_t c = 0; c < prev; ++c) {
      z = t.add(z, t.mul(params[out_w + r * prev + c], h[c]));
    }
    y[r] = z;
  }
  return y;
}

Ids tape_field(Tape& t, const VectorField& field,
               std::span<const Tape::Id> params, std::span<const Tape::Id> x,
               double time) {
  if (const auto* mlp = dynamic_cast<const MlpField*>(&field)) {
    return tape_mlp(t, mlp->spec(), params, x, time);
  }
  if (const auto* lin = dynamic_cast<const LinearScaleField*>(&field)) {
    Ids y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      y[k] = t.mul_const(x[k], lin->scale());
    }
    return y;
  }
  if (dynamic_cast<const ZeroField*>(&field) != nullptr) {
    Ids y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = t.constant(0.0);
    return y;
  }
  if (const auto* gs = dynamic_cast<const GaussianScoreField*>(&field)) {
    double v = gs->var_at(time);
    Ids y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      double m = gs->mean_at(time, static_cast<int>(k));
      y[k] = t.mul_const(t.add_const(x[k], -m), -1.0 / v);
    }
    return y;
  }
  throw ContractError("gradcheck: unsupported field type");
}

}  // namespace

GradCheckReport compare_adjoint_to_unrolled(const Model& model,
                                            const Trajectory& traj,
                                            const DiffusionSchedule& schedule) {
  std::size_t p_total = model.param_count();
  std::size_t p_drift = model.drift->param_count();
  int d = traj.dim;
  int n = traj.grid.steps();

  GradCheckReport report;
  report.param_count = p_total;

  // Adjoint side.
  std::vector<double> grad_adj(p_total, 0.0);
  AdjointWorkspace ws;
  LossParts parts = adjoint_gradient(model, traj, schedule, grad_adj, ws);
  report.loss_adjoint = parts.total();

  // Unrolled side: same objective rebuilt on the tape, parameters first so
  // their gradients sit at the front of the reverse-sweep output.
  Tape t;
  std::vector<double> packed(p_total);
  model.get_params(packed);
  Ids param_ids(p_total);
  for (std::size_t k = 0; k < p_total; ++k) param_ids[k] = t.input(packed[k]);
  auto drift_ids = std::span<const Tape::Id>(param_ids).subspan(0, p_drift);
  auto score_ids = std::span<const Tape::Id>(param_ids).subspan(p_drift);

  Ids x(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    x[static_cast<std::size_t>(k)] = t.constant(traj.state(0)[static_cast<std::size_t>(k)]);
  }
  std::vector<Ids> states;
  states.reserve(static_cast<std::size_t>(n) + 1);
  states.push_back(x);
  for (int i = 0; i < n; ++i) {
    double dt = traj.grid.dt(i);
    double g = schedule.node(i);
    Ids f = tape_field(t, *model.drift, drift_ids, states.back(), traj.grid.time(i));
    Ids next(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      std::size_t j = static_cast<std::size_t>(k);
      double kick = g * std::sqrt(dt) * traj.noise(i)[j];
      next[j] = t.add_const(t.add(states.back()[j], t.mul_const(f[j], dt)), kick);
    }
    states.push_back(std::move(next));
  }

  Tape::Id loss = t.constant(0.5 * d * std::log(2.0 * std::numbers::pi));
  for (int k = 0; k < d; ++k) {
    std::size_t j = static_cast<std::size_t>(k);
    loss = t.add(loss, t.mul_const(t.mul(states.back()[j], states.back()[j]), 0.5));
  }
  for (int i = 0; i < n; ++i) {
    double dt = traj.grid.dt(i);
    double g = schedule.node(i + 1);
    double g2 = g * g;
    double kf = 1.0 / (g * std::sqrt(dt));
    double t_next = traj.grid.time(i + 1);
    Ids f = tape_field(t, *model.drift, drift_ids, states[static_cast<std::size_t>(i) + 1], t_next);
    Ids s = tape_field(t, *model.score, score_ids, states[static_cast<std::size_t>(i) + 1], t_next);
    for (int k = 0; k < d; ++k) {
      std::size_t j = static_cast<std::size_t>(k);
      Tape::Id disp = t.sub(states[static_cast<std::size_t>(i)][j],
                            states[static_cast<std::size_t>(i) + 1][j]);
      Tape::Id drift_part =
          t.mul_const(t.sub(f[j], t.mul_const(s[j], g2)), dt);
      Tape::Id nb = t.mul_const(t.add(disp, drift_part), kf);
      loss = t.add(loss, t.mul_const(t.mul(nb, nb), 0.5));
    }
  }
  report.loss_unrolled = t.val(loss);

  for (int i = 0; i <= n; ++i) {
    for (int k = 0; k < d; ++k) {
      std::size_t j = static_cast<std::size_t>(k);
      report.state_max_diff =
          std::max(report.state_max_diff,
                   std::abs(t.val(states[static_cast<std::size_t>(i)][j]) -
                            traj.state(i)[j]));
    }
  }

  std::vector<double> all = t.gradient(loss);
  double diff_sq = 0.0, ref_sq = 0.0;
  for (std::size_t k = 0; k < p_total; ++k) {
    double dv = grad_adj[k] - all[k];
    diff_sq += dv * dv;
    ref_sq += all[k] * all[k];
    report.max_abs_diff = std::max(report.max_abs_diff, std::abs(dv));
  }
  report.rel_l2 = std::sqrt(diff_sq) / std::max(std::sqrt(ref_sq), 1e-300);
  return report;
}

GradCheckReport gradcheck_instance(int dim, int steps, std::uint64_t seed) {
  if (dim < 1 || steps < 1) {
    throw ConfigError("gradcheck: dims and steps must be >= 1");
  }
  nn::MlpSpec spec;
  spec.input_dim = dim;
  spec.hidden_widths = {32, 32};
  spec.time_embed_dim = 16;
  Model model = make_model(ModelMode::diffflow, spec, spec, seed);

  // The output layers are zero-initialized; randomize them so gradients are
  // non-trivial everywhere.
  Rng rng(Rng::derive_seed(seed, 1));
  for (VectorField* field : {model.drift.get(), model.score.get()}) {
    auto* mlp = dynamic_cast<MlpField*>(field);
    nn::ParamVector p = mlp->param_vector();
    rng.fill_uniform(p.segment("out.weight"), -0.3, 0.3);
    rng.fill_uniform(p.segment("out.bias"), -0.1, 0.1);
    // tame the frequencies so finite-horizon embeddings stay smooth
    for (double& f : p.segment("time_embed.freq")) {
      f = std::min(f, 50.0);
    }
    mlp->set_params(p.values());
  }

  std::vector<double> x0(static_cast<std::size_t>(dim));
  rng.fill_normal(x0);
  TimeGrid grid = TimeGrid::fixed(steps, 1.0, 0.9);
  DiffusionSchedule sched = DiffusionSchedule::constant(0.9);
  Rng traj_rng(Rng::derive_seed(seed, 2));
  Trajectory traj =
      sample_forward_trajectory(*model.drift, x0, grid, sched, traj_rng);
  return compare_adjoint_to_unrolled(model, traj, sched);
}

}  // namespace dflow::check
