#include "dflow/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>

#include <json.hpp>

#include "dflow/adjoint.hpp"
#include "dflow/errors.hpp"
#include "dflow/params_io.hpp"
#include "dflow/parallel.hpp"
#include "dflow/sde.hpp"
#include "dflow/vec.hpp"

namespace dflow {

namespace {

constexpr char kCkptMagic[8] = {'D', 'N', 'F', 'C', 'K', 'P', 'T', '1'};

// Substream keys; iteration and sample index are folded in so that streams
// depend only on (seed, iteration, sample), never on consumption order.
std::uint64_t grid_key(long it) {
  return (1ULL << 60) + static_cast<std::uint64_t>(it);
}
std::uint64_t data_key(long it) {
  return (2ULL << 60) + static_cast<std::uint64_t>(it);
}
std::uint64_t traj_key(long it, std::size_t sample) {
  return (3ULL << 60) + (static_cast<std::uint64_t>(it) << 20) +
         static_cast<std::uint64_t>(sample);
}

void write_u32le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32le(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError("checkpoint: truncated header length");
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_raw(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_raw(std::istream& in, std::size_t count,
                             const char* what) {
  std::vector<double> v(count);
  if (!in.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(count * sizeof(double)))) {
    throw IoError(std::string("checkpoint: truncated section ") + what);
  }
  return v;
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 1) throw ConfigError("train: iterations must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(adam.lr > 0.0)) throw ConfigError("train: lr must be > 0");
  if (!(ema_decay >= 0.0) || ema_decay >= 1.0) {
    throw ConfigError("train: ema_decay must lie in [0, 1)");
  }
  if (!(horizon > 0.0)) throw ConfigError("train: horizon must be > 0");
  if (!(grid_beta > 0.0)) throw ConfigError("train: grid_beta must be > 0");
  if (!(g > 0.0)) throw ConfigError("train: g must be > 0");
  if (phases.empty()) throw ConfigError("train: need at least one phase");
  if (phases.front().start_iteration != 0) {
    throw ConfigError("train: first phase must start at iteration 0");
  }
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (phases[i].steps < (flexible_grid ? 2 : 1)) {
      throw ConfigError("train: phase steps too small");
    }
    if (i > 0 && phases[i].start_iteration <= phases[i - 1].start_iteration) {
      throw ConfigError("train: phase starts must be increasing");
    }
  }
  if (workers < 1) throw ConfigError("train: workers must be >= 1");
  if (max_consecutive_failures < 1) {
    throw ConfigError("train: max_consecutive_failures must be >= 1");
  }
  if (!step_betas.empty()) {
    if (flexible_grid) {
      throw ConfigError("train: step_betas cannot combine with a flexible grid");
    }
    for (double b : step_betas) {
      if (!(b > 0.0) || !std::isfinite(b)) {
        throw ConfigError("train: step_betas entries must be positive finite");
      }
    }
  }
}

int TrainConfig::steps_at(long iteration) const {
  if (!step_betas.empty()) return static_cast<int>(step_betas.size());
  int steps = phases.front().steps;
  for (const auto& p : phases) {
    if (p.start_iteration <= iteration) steps = p.steps;
  }
  return steps;
}

Model Checkpoint::restore_model() const {
  Model m;
  int dim = score_spec.input_dim;
  if (mode == ModelMode::ddpm) {
    m.drift = std::make_unique<LinearScaleField>(dim, -0.5);
  } else {
    if (!drift_spec) {
      throw IoError("checkpoint: missing drift spec for trainable drift");
    }
    m.drift = std::make_unique<MlpField>(
        *drift_spec,
        nn::ParamVector::unflatten(
            nn::layout(*drift_spec),
            std::vector<double>(params.begin(),
                                params.begin() + static_cast<std::ptrdiff_t>(
                                                     drift_spec->param_count()))));
  }
  std::size_t drift_count = m.drift->param_count();
  if (params.size() != drift_count + score_spec.param_count()) {
    throw IoError("checkpoint: parameter count does not match specs");
  }
  m.score = std::make_unique<MlpField>(
      score_spec,
      nn::ParamVector::unflatten(
          nn::layout(score_spec),
          std::vector<double>(params.begin() + static_cast<std::ptrdiff_t>(drift_count),
                              params.end())));
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json sections = nlohmann::json::array();
  if (ckpt.drift_spec) {
    sections.push_back({{"name", "drift"}, {"kind", "params"}});
  }
  sections.push_back({{"name", "score"}, {"kind", "params"}});
  std::size_t p = ckpt.params.size();
  for (const char* name : {"ema", "adam_m", "adam_v"}) {
    sections.push_back({{"name", name}, {"kind", "raw_f64"}, {"count", p}});
  }
  nlohmann::json config = nlohmann::json::array();
  for (const auto& [k, v] : ckpt.config_echo) config.push_back({k, v});
  nlohmann::json header = {{"format_version", 1},
                           {"iteration", ckpt.iteration},
                           {"mode", to_string(ckpt.mode)},
                           {"adam_step", ckpt.adam.step},
                           {"config", config},
                           {"sections", sections}};
  std::string text = header.dump();

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(kCkptMagic, sizeof(kCkptMagic));
    write_u32le(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));

    std::size_t drift_count = 0;
    if (ckpt.drift_spec) {
      drift_count = ckpt.drift_spec->param_count();
      nn::write_params(out, *ckpt.drift_spec,
                       nn::ParamVector::unflatten(
                           nn::layout(*ckpt.drift_spec),
                           std::vector<double>(ckpt.params.begin(),
                                               ckpt.params.begin() +
                                                   static_cast<std::ptrdiff_t>(drift_count))));
    }
    nn::write_params(out, ckpt.score_spec,
                     nn::ParamVector::unflatten(
                         nn::layout(ckpt.score_spec),
                         std::vector<double>(ckpt.params.begin() +
                                                 static_cast<std::ptrdiff_t>(drift_count),
                                             ckpt.params.end())));
    write_raw(out, ckpt.ema_params);
    write_raw(out, ckpt.adam.m);
    write_raw(out, ckpt.adam.v);
    if (!out.flush()) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic))) throw IoError("checkpoint: truncated magic");
  if (std::memcmp(magic, kCkptMagic, sizeof(kCkptMagic)) != 0) {
    throw IoError("checkpoint: bad magic (not a DNFCKPT1 file)");
  }
  std::uint32_t len = read_u32le(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw IoError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: bad header JSON: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    if (header.at("format_version").get<int>() != 1) {
      throw IoError("checkpoint: unsupported format_version");
    }
    ckpt.iteration = header.at("iteration").get<long>();
    ckpt.mode = parse_model_mode(header.at("mode").get<std::string>());
    ckpt.adam.step = header.at("adam_step").get<long>();
    for (const auto& kv : header.at("config")) {
      ckpt.config_echo.emplace_back(kv.at(0).get<std::string>(),
                                    kv.at(1).get<std::string>());
    }
    bool have_drift = false;
    std::size_t raw_count = 0;
    for (const auto& s : header.at("sections")) {
      if (s.at("name") == "drift") have_drift = true;
      if (s.at("name") == "ema") raw_count = s.at("count").get<std::size_t>();
    }
    std::vector<double> drift_values;
    if (have_drift) {
      nn::LoadedParams drift = nn::read_params(in);
      ckpt.drift_spec = drift.spec;
      drift_values = drift.params.flatten();
    }
    nn::LoadedParams score = nn::read_params(in);
    ckpt.score_spec = score.spec;
    ckpt.params = std::move(drift_values);
    auto sv = score.params.flatten();
    ckpt.params.insert(ckpt.params.end(), sv.begin(), sv.end());
    if (raw_count != ckpt.params.size()) {
      throw IoError("checkpoint: section counts disagree with parameters");
    }
    ckpt.ema_params = read_raw(in, raw_count, "ema");
    ckpt.adam.m = read_raw(in, raw_count, "adam_m");
    ckpt.adam.v = read_raw(in, raw_count, "adam_v");
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: bad header field: ") + e.what());
  }
  return ckpt;
}

TrainResult train(Model& model, ModelMode mode, const DataSource& data,
                  const TrainConfig& cfg, const std::filesystem::path& run_dir,
                  const Checkpoint* resume,
                  const std::vector<std::pair<std::string, std::string>>&
                      config_echo) {
  cfg.validate();
  if (data.dim() != model.dim()) {
    throw ConfigError("train: data dimension does not match model");
  }
  std::filesystem::create_directories(run_dir);

  std::size_t p_total = model.param_count();
  std::vector<double> params(p_total);
  model.get_params(params);
  std::vector<double> ema = params;
  AdamState adam;
  adam.resize(p_total);
  long start_iter = 0;
  if (resume) {
    if (resume->params.size() != p_total) {
      throw ConfigError("train: resume checkpoint does not match the model");
    }
    params = resume->params;
    ema = resume->ema_params;
    adam = resume->adam;
    start_iter = resume->iteration;
    model.set_params(params);
  }

  auto log_path = run_dir / "training_log.csv";
  std::ofstream log(log_path, resume ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot open for writing: " + log_path.string());
  if (!resume) {
    log << "iteration,loss,prior_term,noise_term,grad_norm,steps,wall_ms\n";
  }

  Rng root(cfg.seed);
  std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  std::size_t d = static_cast<std::size_t>(model.dim());
  int workers = cfg.workers;

  // Per-sample gradient rows; reduced in sample order so the result is
  // independent of how samples are sharded over workers.
  std::vector<double> sample_grads(batch * p_total);
  std::vector<LossParts> sample_parts(batch);
  std::vector<double> grad(p_total);
  std::vector<double> x0s;

  std::vector<Model> worker_models;
  std::vector<AdjointWorkspace> worker_ws(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) worker_models.push_back(model.clone());

  TrainResult result;
  result.log_path = log_path;
  auto ckpt_path = run_dir / "checkpoint.bin";

  auto write_ckpt = [&](long next_iteration) {
    Checkpoint ckpt;
    ckpt.iteration = next_iteration;
    ckpt.mode = mode;
    if (auto* mlp = dynamic_cast<const MlpField*>(model.drift.get())) {
      ckpt.drift_spec = mlp->spec();
    }
    auto* score = dynamic_cast<const MlpField*>(model.score.get());
    if (score == nullptr) {
      throw ContractError("train: score field must be an MLP to checkpoint");
    }
    ckpt.score_spec = score->spec();
    ckpt.params = params;
    ckpt.ema_params = ema;
    ckpt.adam = adam;
    ckpt.config_echo = config_echo;
    save_checkpoint(ckpt_path, ckpt);
  };

  int consecutive_failures = 0;
  double last_loss = std::numeric_limits<double>::quiet_NaN();

  for (long it = start_iter; it < cfg.iterations; ++it) {
    auto t0 = std::chrono::steady_clock::now();
    int steps = cfg.steps_at(it);
    TimeGrid grid = [&] {
      if (!cfg.step_betas.empty()) return TimeGrid::from_deltas(cfg.step_betas);
      if (cfg.flexible_grid) {
        Rng grid_rng = root.child(grid_key(it));
        return TimeGrid::flexible(steps, cfg.horizon, cfg.grid_beta, grid_rng);
      }
      return TimeGrid::fixed(steps, cfg.horizon, cfg.grid_beta);
    }();
    DiffusionSchedule sched = DiffusionSchedule::constant(cfg.g);

    x0s.clear();
    Rng data_rng = root.child(data_key(it));
    data.sample_batch(batch, data_rng, x0s);
    if (x0s.size() != batch * d) {
      throw ContractError("train: data source returned a bad batch size");
    }

    for (int w = 0; w < workers; ++w) worker_models[static_cast<std::size_t>(w)].set_params(params);
    fill(sample_grads, 0.0);

    std::atomic<bool> failed{false};
    std::mutex fail_mutex;
    std::string fail_msg;
    parallel_for(batch, workers, [&](std::size_t w, std::size_t begin, std::size_t end) {
      Model& m = worker_models[w];
      AdjointWorkspace& ws = worker_ws[w];
      for (std::size_t s = begin; s < end; ++s) {
        try {
          Rng traj_rng = root.child(traj_key(it, s));
          Trajectory traj = sample_forward_trajectory(
              *m.drift, std::span<const double>(x0s).subspan(s * d, d), grid,
              sched, traj_rng);
          sample_parts[s] = adjoint_gradient(
              m, traj, sched,
              std::span<double>(sample_grads).subspan(s * p_total, p_total), ws);
        } catch (const std::exception& e) {
          failed.store(true);
          std::lock_guard<std::mutex> lock(fail_mutex);
          fail_msg = e.what();
        }
      }
    });

    LossParts mean;
    if (!failed.load()) {
      fill(grad, 0.0);
      double inv = 1.0 / static_cast<double>(batch);
      for (std::size_t s = 0; s < batch; ++s) {
        axpy(inv, std::span<const double>(sample_grads).subspan(s * p_total, p_total),
             std::span<double>(grad));
        mean.prior_term += inv * sample_parts[s].prior_term;
        mean.noise_term_sum += inv * sample_parts[s].noise_term_sum;
        mean.fwd_noise_half_sq += inv * sample_parts[s].fwd_noise_half_sq;
        mean.log_g_ratio += inv * sample_parts[s].log_g_ratio;
      }
      if (!all_finite(grad) || !std::isfinite(mean.total())) {
        failed.store(true);
        fail_msg = "non-finite gradient or loss";
      }
    }

    if (failed.load()) {
      ++consecutive_failures;
      ++result.skipped_iterations;
      if (consecutive_failures >= cfg.max_consecutive_failures) {
        throw NumericError("training aborted after " +
                           std::to_string(consecutive_failures) +
                           " consecutive failed iterations (last: " + fail_msg +
                           ")");
      }
      continue;  // skip the update, keep going
    }
    consecutive_failures = 0;

    double gnorm = norm(grad);
    if (cfg.grad_clip > 0.0 && gnorm > cfg.grad_clip) {
      scale(grad, cfg.grad_clip / gnorm);
    }
    adam_step(params, grad, adam, cfg.adam);
    model.set_params(params);
    ema_update(ema, params, cfg.ema_decay);
    last_loss = mean.total();

    if (it % cfg.log_every == 0 || it + 1 == cfg.iterations) {
      auto wall = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
      char line[256];
      std::snprintf(line, sizeof(line), "%ld,%.10g,%.10g,%.10g,%.10g,%d,%.3f\n",
                    it, mean.total(), mean.prior_term, mean.noise_term_sum,
                    gnorm, steps, wall);
      log << line;
      log.flush();
    }
    if (cfg.checkpoint_every > 0 && ((it + 1) % cfg.checkpoint_every == 0 ||
                                     it + 1 == cfg.iterations)) {
      write_ckpt(it + 1);
    }
  }

  result.iterations_run = cfg.iterations - start_iter;
  result.final_loss = last_loss;
  result.final_params = std::move(params);
  result.ema_params = std::move(ema);
  result.checkpoint_path = ckpt_path;
  return result;
}

}  // namespace dflow
