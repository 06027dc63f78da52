#include "dflow/experiment.hpp"

#include <array>
#include <string>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

constexpr std::array<std::string_view, 50> kKnownKeys = {
    "mode",
    "seed",
    "workers",
    "run.root",
    "data.kind",
    "data.csv",
    "data.seed",
    "data.val_n",
    "data.test_n",
    "data.train_frac",
    "data.valid_frac",
    "model.hidden",
    "model.time_embed",
    "grid.steps",
    "grid.horizon",
    "grid.beta",
    "grid.flexible",
    "grid.betas",
    "sde.g",
    "train.iterations",
    "train.batch",
    "train.lr",
    "train.beta1",
    "train.beta2",
    "train.eps",
    "train.ema",
    "train.clip",
    "train.phases",
    "train.log_every",
    "train.checkpoint_every",
    "train.max_failures",
    "sample.lambda",
    "sample.n",
    "sample.steps",
    "sample.denoise",
    "eval.method",
    "eval.tol",
    "eval.mc",
    "eval.points",
    "eval.use_ema",
    "eval.probes",
    "density.res",
    "density.lo",
    "density.hi",
    "density.method",
    "data.n",
    "gradcheck.dims",
    "gradcheck.steps",
    "gradcheck.instances",
    "gradcheck.tol",
};

std::vector<ProgressivePhase> parse_phases(const std::string& text) {
  std::vector<ProgressivePhase> phases;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    std::string piece = text.substr(start, comma - start);
    start = comma + 1;
    if (piece.empty()) continue;
    std::size_t colon = piece.find(':');
    if (colon == std::string::npos) {
      throw ConfigError(
          "config key 'train.phases': expected 'start:steps' entries, got '" +
          piece + "'");
    }
    try {
      ProgressivePhase phase;
      phase.start_iteration = std::stol(piece.substr(0, colon));
      phase.steps = std::stoi(piece.substr(colon + 1));
      phases.push_back(phase);
    } catch (const std::exception&) {
      throw ConfigError("config key 'train.phases': cannot parse '" + piece +
                        "'");
    }
  }
  return phases;
}

}  // namespace

std::span<const std::string_view> known_config_keys() { return kKnownKeys; }

ModelMode mode_from_config(const KeyValueConfig& cfg) {
  return parse_model_mode(cfg.get_string("mode", "diffflow"));
}

nn::MlpSpec mlp_spec_from_config(const KeyValueConfig& cfg, int dim) {
  nn::MlpSpec spec;
  spec.input_dim = dim;
  spec.hidden_widths = {64, 64, 64};
  if (cfg.has("model.hidden")) {
    spec.hidden_widths = cfg.get_int_list("model.hidden");
  }
  spec.time_embed_dim = cfg.get_int("model.time_embed", 32);
  return spec;
}

double diffusion_from_config(const KeyValueConfig& cfg) {
  double fallback = mode_from_config(cfg) == ModelMode::nf ? 0.01 : 1.0;
  return cfg.get_double("sde.g", fallback);
}

TrainConfig train_config_from_config(const KeyValueConfig& cfg) {
  TrainConfig t;
  t.iterations = cfg.get_long("train.iterations", t.iterations);
  t.batch_size = cfg.get_int("train.batch", t.batch_size);
  t.adam.lr = cfg.get_double("train.lr", t.adam.lr);
  t.adam.beta1 = cfg.get_double("train.beta1", t.adam.beta1);
  t.adam.beta2 = cfg.get_double("train.beta2", t.adam.beta2);
  t.adam.eps = cfg.get_double("train.eps", t.adam.eps);
  t.ema_decay = cfg.get_double("train.ema", t.ema_decay);
  t.grad_clip = cfg.get_double("train.clip", t.grad_clip);
  t.horizon = cfg.get_double("grid.horizon", t.horizon);
  t.grid_beta = cfg.get_double("grid.beta", t.grid_beta);
  t.flexible_grid = cfg.get_bool("grid.flexible", t.flexible_grid);
  if (cfg.has("train.phases")) {
    t.phases = parse_phases(cfg.require_string("train.phases"));
  }
  t.step_betas = cfg.get_double_list("grid.betas");
  t.g = diffusion_from_config(cfg);
  t.seed = cfg.get_u64("seed", t.seed);
  t.workers = cfg.get_int("workers", t.workers);
  t.log_every = cfg.get_long("train.log_every", t.log_every);
  t.checkpoint_every = cfg.get_long("train.checkpoint_every", t.checkpoint_every);
  t.max_consecutive_failures =
      cfg.get_int("train.max_failures", t.max_consecutive_failures);
  return t;
}

TimeGrid eval_grid_from_config(const KeyValueConfig& cfg, int steps_override) {
  std::vector<double> betas = cfg.get_double_list("grid.betas");
  if (!betas.empty()) return TimeGrid::from_deltas(betas);
  int steps = steps_override > 0 ? steps_override : cfg.get_int("grid.steps", 20);
  return TimeGrid::fixed(steps, cfg.get_double("grid.horizon", 0.5),
                         cfg.get_double("grid.beta", 0.9));
}

ResolvedData data_from_config(const KeyValueConfig& cfg) {
  bool has_kind = cfg.has("data.kind");
  bool has_csv = cfg.has("data.csv");
  if (has_kind == has_csv) {
    throw ConfigError("set exactly one of data.kind or data.csv");
  }

  ResolvedData out;
  std::uint64_t data_seed = cfg.get_u64("data.seed", 1);
  if (has_kind) {
    out.synthetic = true;
    out.kind = data::parse_kind(cfg.require_string("data.kind"));
    out.dim = 2;
    out.source = std::make_unique<data::SyntheticSource>(out.kind);
    std::size_t val_n =
        static_cast<std::size_t>(cfg.get_long("data.val_n", 1024));
    std::size_t test_n =
        static_cast<std::size_t>(cfg.get_long("data.test_n", 4096));
    out.valid =
        data::generate(out.kind, val_n, Rng::derive_seed(data_seed, 0x7a11dULL));
    out.test =
        data::generate(out.kind, test_n, Rng::derive_seed(data_seed, 0x7e57ULL));
  } else {
    out.synthetic = false;
    data::TabularSplits splits =
        data::load_tabular(cfg.require_string("data.csv"),
                           cfg.get_double("data.train_frac", 0.70),
                           cfg.get_double("data.valid_frac", 0.15), data_seed);
    out.dim = splits.dim;
    out.valid = std::move(splits.valid);
    out.test = std::move(splits.test);
    out.rescale_log_det = splits.rescale_log_det;
    out.source =
        std::make_unique<data::MatrixSource>(std::move(splits.train), splits.dim);
  }
  return out;
}

Model model_from_config(const KeyValueConfig& cfg, int dim) {
  nn::MlpSpec spec = mlp_spec_from_config(cfg, dim);
  return make_model(mode_from_config(cfg), spec, spec,
                    cfg.get_u64("seed", 0));
}

}  // namespace dflow
