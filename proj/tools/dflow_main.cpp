// Command-line driver: training runs, sampling, likelihood evaluation,
// gradient self-checks, dataset generation, and density exports. Every
// command resolves a flat key=value config (file, then --set overrides, then
// dedicated flags), writes a manifest echoing it, and honors --seed with
// bit-exact reproducibility.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dflow/config.hpp"
#include "dflow/csv.hpp"
#include "dflow/datasets.hpp"
#include "dflow/errors.hpp"
#include "dflow/experiment.hpp"
#include "dflow/nf.hpp"
#include "dflow/nll.hpp"
#include "dflow/sampler.hpp"
#include "dflow/selfcheck.hpp"
#include "dflow/trainer.hpp"

namespace {

using namespace dflow;

// Flags shared by every subcommand. Dedicated flags are folded into the
// config after --set entries, so flags always win and the manifest echoes
// the final values.
struct CommonArgs {
  std::string config_file;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_file,
                    "key=value config file (see README for the key list)");
    cmd->add_option("--set", sets, "override a config entry, e.g. --set sde.g=0.5")
        ->type_name("KEY=VALUE");
  }

  KeyValueConfig resolve(const Checkpoint* base = nullptr) const {
    KeyValueConfig cfg;
    if (base) {
      for (const auto& [key, value] : base->config_echo) cfg.set(key, value);
    }
    if (!config_file.empty()) {
      cfg.merge_from(KeyValueConfig::from_file(config_file));
    }
    for (const std::string& entry : sets) {
      std::size_t eq = entry.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + entry + "'");
      }
      cfg.set(entry.substr(0, eq), entry.substr(eq + 1));
    }
    return cfg;
  }
};

void reject_unknown_keys(const KeyValueConfig& cfg) {
  std::vector<std::string> bad = cfg.unknown_keys(known_config_keys());
  if (bad.empty()) return;
  std::string msg = "unknown config key";
  if (bad.size() > 1) msg += "s";
  msg += ":";
  for (const std::string& key : bad) msg += " '" + key + "'";
  throw ConfigError(msg);
}

// Option helper: fold a flag into the config only when the user passed it.
template <typename T>
void fold(KeyValueConfig& cfg, const CLI::Option* opt, const std::string& key,
          const T& value) {
  if (opt != nullptr && opt->count() > 0) {
    if constexpr (std::is_same_v<T, std::string>) {
      cfg.set(key, value);
    } else if constexpr (std::is_same_v<T, bool>) {
      cfg.set(key, value ? "true" : "false");
    } else {
      std::ostringstream text;
      text.precision(17);
      text << value;
      cfg.set(key, text.str());
    }
  }
}

Model model_from_checkpoint(const Checkpoint& ckpt, bool use_ema) {
  Model model = ckpt.restore_model();
  if (use_ema && !ckpt.ema_params.empty()) model.set_params(ckpt.ema_params);
  return model;
}

std::vector<std::string> coordinate_header(int dim) {
  std::vector<std::string> header;
  for (int k = 1; k <= dim; ++k) header.push_back("x_" + std::to_string(k));
  return header;
}

// ---------------------------------------------------------------- train --

struct TrainArgs {
  CommonArgs common;
  std::string run_dir;
  std::string resume_path;
  std::string mode;
  std::uint64_t seed = 0;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

int cmd_train(const TrainArgs& args) {
  std::optional<Checkpoint> resume;
  if (!args.resume_path.empty()) resume = load_checkpoint(args.resume_path);

  KeyValueConfig cfg = args.common.resolve(resume ? &*resume : nullptr);
  fold(cfg, args.mode_opt, "mode", args.mode);
  fold(cfg, args.seed_opt, "seed", args.seed);
  reject_unknown_keys(cfg);

  ModelMode mode = mode_from_config(cfg);
  if (resume && resume->mode != mode) {
    throw ConfigError("train: checkpoint mode '" + to_string(resume->mode) +
                      "' conflicts with configured mode '" + to_string(mode) +
                      "'");
  }

  ResolvedData data = data_from_config(cfg);
  TrainConfig tcfg = train_config_from_config(cfg);
  Model model = resume ? resume->restore_model()
                       : model_from_config(cfg, data.dim);
  if (model.dim() != data.dim) {
    throw ConfigError("train: model dimension " + std::to_string(model.dim()) +
                      " does not match data dimension " +
                      std::to_string(data.dim));
  }

  std::optional<std::filesystem::path> explicit_dir;
  if (!args.run_dir.empty()) explicit_dir = args.run_dir;
  std::filesystem::path run_dir =
      make_run_dir(cfg.get_string("run.root", "runs"), cfg, explicit_dir);

  nlohmann::json extra = {{"run_dir", run_dir.string()},
                          {"mode", to_string(mode)},
                          {"dim", data.dim},
                          {"param_count", model.param_count()}};
  if (resume) extra["resumed_from"] = args.resume_path;
  write_manifest(run_dir / "manifest.json", "train", cfg, extra.dump());

  TrainResult result = train(model, mode, *data.source, tcfg, run_dir,
                             resume ? &*resume : nullptr, cfg.echo());

  std::cout << "trained " << result.iterations_run << " iterations, final loss "
            << result.final_loss << "\n"
            << "checkpoint: " << result.checkpoint_path.string() << "\n"
            << "log: " << result.log_path.string() << "\n";
  if (result.skipped_iterations > 0) {
    std::cout << "skipped " << result.skipped_iterations
              << " diverged iterations\n";
  }
  return 0;
}

// --------------------------------------------------------------- sample --

struct SampleArgs {
  CommonArgs common;
  std::string ckpt_path;
  std::string out = "samples.csv";
  double lambda = 1.0;
  int steps = 0;
  long n = 2000;
  bool denoise = true;
  std::uint64_t seed = 0;
  bool use_ema = true;
  CLI::Option *lambda_opt = nullptr, *steps_opt = nullptr, *n_opt = nullptr,
              *denoise_opt = nullptr, *seed_opt = nullptr, *ema_opt = nullptr;
};

int cmd_sample(const SampleArgs& args) {
  Checkpoint ckpt = load_checkpoint(args.ckpt_path);
  KeyValueConfig cfg = args.common.resolve(&ckpt);
  fold(cfg, args.lambda_opt, "sample.lambda", args.lambda);
  fold(cfg, args.steps_opt, "sample.steps", args.steps);
  fold(cfg, args.n_opt, "sample.n", args.n);
  fold(cfg, args.denoise_opt, "sample.denoise", args.denoise);
  fold(cfg, args.seed_opt, "seed", args.seed);
  fold(cfg, args.ema_opt, "eval.use_ema", args.use_ema);
  reject_unknown_keys(cfg);

  Model model =
      model_from_checkpoint(ckpt, cfg.get_bool("eval.use_ema", true));
  TimeGrid grid = eval_grid_from_config(cfg, cfg.get_int("sample.steps", 0));
  auto schedule = DiffusionSchedule::constant(diffusion_from_config(cfg));

  SamplerConfig sampler;
  sampler.lambda = cfg.get_double("sample.lambda", 1.0);
  sampler.tweedie_final = cfg.get_bool("sample.denoise", true);
  if (sampler.lambda < 0.0 || sampler.lambda > 1.0) {
    throw ConfigError("sample.lambda must lie in [0, 1]");
  }

  std::size_t n = static_cast<std::size_t>(cfg.get_long("sample.n", 2000));
  Rng rng(cfg.get_u64("seed", 0));
  std::vector<double> samples;
  generate_samples(model, grid, schedule, sampler, n, rng, samples);

  write_csv(args.out, coordinate_header(model.dim()), samples,
            static_cast<std::size_t>(model.dim()));
  nlohmann::json extra = {{"checkpoint", args.ckpt_path},
                          {"rows", n},
                          {"out", args.out}};
  write_manifest(args.out + ".manifest.json", "sample", cfg, extra.dump());
  std::cout << "wrote " << n << " samples to " << args.out << "\n";
  return 0;
}

// ------------------------------------------------------------- eval-nll --

struct EvalArgs {
  CommonArgs common;
  std::string ckpt_path;
  std::string data_csv;
  std::string out = "nll_report.csv";
  std::string method = "ode";
  double tol = 1e-5;
  long mc = 100;
  long points = 0;
  std::uint64_t seed = 0;
  bool use_ema = true;
  CLI::Option *method_opt = nullptr, *tol_opt = nullptr, *mc_opt = nullptr,
              *points_opt = nullptr, *seed_opt = nullptr, *ema_opt = nullptr;
};

int cmd_eval_nll(const EvalArgs& args) {
  Checkpoint ckpt = load_checkpoint(args.ckpt_path);
  KeyValueConfig cfg = args.common.resolve(&ckpt);
  fold(cfg, args.method_opt, "eval.method", args.method);
  fold(cfg, args.tol_opt, "eval.tol", args.tol);
  fold(cfg, args.mc_opt, "eval.mc", args.mc);
  fold(cfg, args.points_opt, "eval.points", args.points);
  fold(cfg, args.seed_opt, "seed", args.seed);
  fold(cfg, args.ema_opt, "eval.use_ema", args.use_ema);
  reject_unknown_keys(cfg);

  Model model =
      model_from_checkpoint(ckpt, cfg.get_bool("eval.use_ema", true));
  const int d = model.dim();

  // Evaluation points: an explicit CSV wins; otherwise the held-out test
  // split of the configured dataset.
  std::vector<double> points;
  double rescale_log_det = 0.0;
  if (!args.data_csv.empty()) {
    CsvTable table = read_csv(args.data_csv);
    if (table.cols != static_cast<std::size_t>(d)) {
      throw ConfigError("eval-nll: " + args.data_csv + " has " +
                        std::to_string(table.cols) + " columns, model expects " +
                        std::to_string(d));
    }
    points = std::move(table.values);
  } else {
    ResolvedData data = data_from_config(cfg);
    if (data.dim != d) {
      throw ConfigError("eval-nll: dataset dimension does not match model");
    }
    points = std::move(data.test);
    rescale_log_det = data.rescale_log_det;
  }
  std::size_t count = points.size() / static_cast<std::size_t>(d);
  long limit = cfg.get_long("eval.points", 0);
  if (limit > 0 && static_cast<std::size_t>(limit) < count) {
    count = static_cast<std::size_t>(limit);
  }
  if (count == 0) throw ConfigError("eval-nll: no evaluation points");

  std::string method = cfg.get_string("eval.method", "ode");
  TimeGrid grid = eval_grid_from_config(cfg);
  auto schedule = DiffusionSchedule::constant(diffusion_from_config(cfg));
  Rng root(cfg.get_u64("seed", 0));

  std::vector<double> rows;
  std::vector<std::string> header = {"index", "nll_nats"};
  bool with_se = method == "bound";
  if (with_se) header.push_back("std_error");

  double mean_nats = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    auto x = std::span<const double>(points).subspan(
        i * static_cast<std::size_t>(d), static_cast<std::size_t>(d));
    double value = 0.0, se = 0.0;
    if (method == "ode") {
      OdeNllOptions opts;
      opts.ode.atol = opts.ode.rtol = cfg.get_double("eval.tol", 1e-5);
      opts.hutchinson_probes = cfg.get_int("eval.probes", 16);
      value = ode_nll(model, x, schedule, grid.horizon(), opts).nll;
    } else if (method == "bound") {
      Rng point_rng = root.child(i);
      ElboEstimate est = elbo_nll_bound(
          model, x, grid, schedule,
          static_cast<std::size_t>(cfg.get_long("eval.mc", 100)), point_rng);
      value = est.mean;
      se = est.std_error;
    } else if (method == "nf") {
      value = nf_mode_nll(model, x, grid).nll;
    } else {
      throw ConfigError("eval.method must be one of ode, bound, nf");
    }
    rows.push_back(static_cast<double>(i));
    rows.push_back(value);
    if (with_se) rows.push_back(se);
    mean_nats += value;
  }
  mean_nats /= static_cast<double>(count);
  double raw_nats = mean_nats + rescale_log_det;
  double bits = bits_per_dim(mean_nats, d, rescale_log_det);

  write_csv(args.out, header, rows, header.size());
  nlohmann::json extra = {{"checkpoint", args.ckpt_path},
                          {"method", method},
                          {"points", count},
                          {"mean_nll_nats", mean_nats},
                          {"mean_nll_nats_raw_units", raw_nats},
                          {"bits_per_dim", bits},
                          {"out", args.out}};
  if (!args.data_csv.empty()) extra["data"] = args.data_csv;
  write_manifest(args.out + ".manifest.json", "eval-nll", cfg, extra.dump());

  std::printf("eval-nll method=%s points=%zu mean_nats=%.6f bits_per_dim=%.6f\n",
              method.c_str(), count, mean_nats, bits);
  return 0;
}

// ------------------------------------------------------------ gradcheck --

struct GradcheckArgs {
  CommonArgs common;
  std::vector<int> dims = {2};
  std::vector<int> steps = {4, 8, 32};
  int instances = 6;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  std::string out = "gradcheck_report.csv";
  CLI::Option *dims_opt = nullptr, *steps_opt = nullptr, *inst_opt = nullptr,
              *tol_opt = nullptr, *seed_opt = nullptr;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  KeyValueConfig cfg = args.common.resolve();
  auto join = [](const std::vector<int>& v) {
    std::string text;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) text += ",";
      text += std::to_string(v[i]);
    }
    return text;
  };
  fold(cfg, args.dims_opt, "gradcheck.dims", join(args.dims));
  fold(cfg, args.steps_opt, "gradcheck.steps", join(args.steps));
  fold(cfg, args.inst_opt, "gradcheck.instances", args.instances);
  fold(cfg, args.tol_opt, "gradcheck.tol", args.tol);
  fold(cfg, args.seed_opt, "seed", args.seed);
  reject_unknown_keys(cfg);

  std::vector<int> dims = cfg.has("gradcheck.dims")
                              ? cfg.get_int_list("gradcheck.dims")
                              : args.dims;
  std::vector<int> steps = cfg.has("gradcheck.steps")
                               ? cfg.get_int_list("gradcheck.steps")
                               : args.steps;
  int instances = cfg.get_int("gradcheck.instances", args.instances);
  double tol = cfg.get_double("gradcheck.tol", args.tol);
  std::uint64_t seed = cfg.get_u64("seed", args.seed);

  std::vector<double> rows;
  std::size_t failures = 0, total = 0;
  std::uint64_t counter = 0;
  for (int dim : dims) {
    for (int n : steps) {
      for (int k = 0; k < instances; ++k) {
        std::uint64_t instance_seed = Rng::derive_seed(seed, counter++);
        check::GradCheckReport report =
            check::gradcheck_instance(dim, n, instance_seed);
        bool ok = report.pass(tol);
        ++total;
        if (!ok) ++failures;
        std::printf(
            "gradcheck dim=%d steps=%d seed=%llu rel_l2=%.3e "
            "state_max=%.3e %s\n",
            dim, n, static_cast<unsigned long long>(instance_seed),
            report.rel_l2, report.state_max_diff, ok ? "pass" : "FAIL");
        rows.insert(rows.end(),
                    {static_cast<double>(dim), static_cast<double>(n),
                     static_cast<double>(instance_seed), report.rel_l2,
                     report.state_max_diff, ok ? 1.0 : 0.0});
      }
    }
  }
  write_csv(args.out,
            {"dim", "steps", "seed", "rel_l2", "state_max_diff", "pass"}, rows,
            6);
  nlohmann::json extra = {{"total", total},
                          {"failures", failures},
                          {"tolerance", tol},
                          {"out", args.out}};
  write_manifest(args.out + ".manifest.json", "gradcheck", cfg, extra.dump());

  std::printf("gradcheck %zu/%zu instances within %.1e: %s\n", total - failures,
              total, tol, failures == 0 ? "PASS" : "FAIL");
  return failures == 0 ? 0 : 1;
}

// ------------------------------------------------------------- gen-data --

struct GenDataArgs {
  CommonArgs common;
  std::string kind;
  long n = 10000;
  std::uint64_t seed = 1;
  std::string out;
  CLI::Option *kind_opt = nullptr, *n_opt = nullptr, *seed_opt = nullptr;
};

int cmd_gen_data(const GenDataArgs& args) {
  KeyValueConfig cfg = args.common.resolve();
  fold(cfg, args.kind_opt, "data.kind", args.kind);
  fold(cfg, args.n_opt, "data.n", args.n);
  fold(cfg, args.seed_opt, "data.seed", args.seed);
  reject_unknown_keys(cfg);

  data::Kind2D kind = data::parse_kind(cfg.require_string("data.kind"));
  std::size_t n = static_cast<std::size_t>(cfg.get_long("data.n", 10000));
  std::uint64_t seed = cfg.get_u64("data.seed", 1);
  if (args.out.empty()) throw ConfigError("gen-data: --out is required");

  std::filesystem::path manifest_path = args.out + ".manifest.json";
  data::write_dataset(args.out, manifest_path, kind, n, seed);

  // Merge the command manifest into the dataset manifest so one file
  // carries both the generator spec and the resolved config.
  std::ifstream in(manifest_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  write_manifest(manifest_path, "gen-data", cfg, buffer.str());

  std::cout << "wrote " << n << " points to " << args.out << "\n";
  return 0;
}

// ------------------------------------------------------- export-density --

struct DensityArgs {
  CommonArgs common;
  std::string ckpt_path;
  std::string out = "density.csv";
  std::string svg;
  int res = 100;
  double lo = -4.0, hi = 4.0;
  std::string method = "ode";
  std::uint64_t seed = 0;
  CLI::Option *res_opt = nullptr, *lo_opt = nullptr, *hi_opt = nullptr,
              *method_opt = nullptr;
};

void write_density_svg(const std::filesystem::path& path,
                       const std::vector<double>& logp, int res) {
  double lo = logp[0], hi = logp[0];
  for (double v : logp) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double span = hi - lo;
  if (!(span > 0.0)) span = 1.0;

  const int cell = 6;
  const int size = res * cell;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
      << "\" height=\"" << size << "\" viewBox=\"0 0 " << size << " " << size
      << "\">\n";
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      double u = (logp[static_cast<std::size_t>(iy) *
                           static_cast<std::size_t>(res) +
                       static_cast<std::size_t>(ix)] -
                  lo) /
                 span;
      // Dark blue to yellow, two-segment ramp.
      int r, g, b;
      if (u < 0.5) {
        double w = u / 0.5;
        r = static_cast<int>(20 + 30 * w);
        g = static_cast<int>(20 + 120 * w);
        b = static_cast<int>(90 + 60 * w);
      } else {
        double w = (u - 0.5) / 0.5;
        r = static_cast<int>(50 + 200 * w);
        g = static_cast<int>(140 + 100 * w);
        b = static_cast<int>(150 - 120 * w);
      }
      // SVG y grows downward; flip so larger x_2 sits on top.
      out << "<rect x=\"" << ix * cell << "\" y=\"" << (res - 1 - iy) * cell
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
          << r << "," << g << "," << b << ")\"/>\n";
    }
  }
  out << "</svg>\n";
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

int cmd_export_density(const DensityArgs& args) {
  Checkpoint ckpt = load_checkpoint(args.ckpt_path);
  KeyValueConfig cfg = args.common.resolve(&ckpt);
  fold(cfg, args.res_opt, "density.res", args.res);
  fold(cfg, args.lo_opt, "density.lo", args.lo);
  fold(cfg, args.hi_opt, "density.hi", args.hi);
  fold(cfg, args.method_opt, "density.method", args.method);
  reject_unknown_keys(cfg);

  Model model =
      model_from_checkpoint(ckpt, cfg.get_bool("eval.use_ema", true));
  if (model.dim() != 2) {
    throw ConfigError("export-density requires a 2-dimensional model");
  }
  int res = cfg.get_int("density.res", 100);
  double lo = cfg.get_double("density.lo", -4.0);
  double hi = cfg.get_double("density.hi", 4.0);
  if (res < 2 || !(hi > lo)) {
    throw ConfigError("export-density: need density.res >= 2 and hi > lo");
  }
  std::string method = cfg.get_string("density.method", "ode");
  if (method != "ode" && method != "nf") {
    throw ConfigError("density.method must be ode or nf");
  }

  TimeGrid grid = eval_grid_from_config(cfg);
  auto schedule = DiffusionSchedule::constant(diffusion_from_config(cfg));
  OdeNllOptions opts;
  opts.ode.atol = opts.ode.rtol = cfg.get_double("eval.tol", 1e-5);

  std::vector<double> rows;
  std::vector<double> logp(static_cast<std::size_t>(res) *
                           static_cast<std::size_t>(res));
  std::vector<double> x(2);
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      x[0] = lo + (hi - lo) * ix / (res - 1);
      x[1] = lo + (hi - lo) * iy / (res - 1);
      double nll = method == "ode"
                       ? ode_nll(model, x, schedule, grid.horizon(), opts).nll
                       : nf_mode_nll(model, x, grid).nll;
      double value = -nll;
      logp[static_cast<std::size_t>(iy) * static_cast<std::size_t>(res) +
           static_cast<std::size_t>(ix)] = value;
      rows.insert(rows.end(), {x[0], x[1], value});
    }
  }
  write_csv(args.out, {"x_1", "x_2", "log_density"}, rows, 3);
  if (!args.svg.empty()) write_density_svg(args.svg, logp, res);

  nlohmann::json extra = {{"checkpoint", args.ckpt_path},
                          {"rows", logp.size()},
                          {"out", args.out}};
  if (!args.svg.empty()) extra["svg"] = args.svg;
  write_manifest(args.out + ".manifest.json", "export-density", cfg,
                 extra.dump());
  std::cout << "wrote " << logp.size() << " lattice points to " << args.out
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-SDE generative modeling laboratory"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train_cmd =
      app.add_subcommand("train", "run the optimization loop");
  train_args.common.attach(train_cmd);
  train_cmd->add_option("--run-dir", train_args.run_dir,
                        "explicit run directory (default runs/<stamp>-<hash>)");
  train_cmd->add_option("--resume", train_args.resume_path,
                        "checkpoint to continue from");
  train_args.mode_opt = train_cmd->add_option(
      "--mode", train_args.mode, "diffflow, ddpm, or nf");
  train_args.seed_opt =
      train_cmd->add_option("--seed", train_args.seed, "master RNG seed");

  SampleArgs sample_args;
  CLI::App* sample_cmd =
      app.add_subcommand("sample", "draw samples from a trained model");
  sample_args.common.attach(sample_cmd);
  sample_cmd->add_option("ckpt", sample_args.ckpt_path, "checkpoint file")
      ->required();
  sample_cmd->add_option("--out", sample_args.out, "output CSV");
  sample_args.lambda_opt = sample_cmd->add_option(
      "--lambda", sample_args.lambda, "noise family member in [0,1]");
  sample_args.steps_opt =
      sample_cmd->add_option("--steps", sample_args.steps, "grid steps");
  sample_args.n_opt =
      sample_cmd->add_option("--n", sample_args.n, "number of samples");
  sample_args.denoise_opt = sample_cmd->add_flag(
      "--denoise,!--no-denoise", sample_args.denoise,
      "apply the posterior-mean final step");
  sample_args.seed_opt =
      sample_cmd->add_option("--seed", sample_args.seed, "master RNG seed");
  sample_args.ema_opt = sample_cmd->add_flag(
      "--ema,!--no-ema", sample_args.use_ema, "use EMA parameters");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval-nll", "negative log-likelihood of data under a trained model");
  eval_args.common.attach(eval_cmd);
  eval_cmd->add_option("ckpt", eval_args.ckpt_path, "checkpoint file")
      ->required();
  eval_cmd->add_option("--data", eval_args.data_csv,
                       "points CSV (default: configured test split)");
  eval_cmd->add_option("--out", eval_args.out, "per-point report CSV");
  eval_args.method_opt = eval_cmd->add_option(
      "--method", eval_args.method, "ode (exact), bound (MC), or nf (discrete)");
  eval_args.tol_opt = eval_cmd->add_option("--tol", eval_args.tol,
                                           "integrator tolerance for ode");
  eval_args.mc_opt = eval_cmd->add_option(
      "--mc", eval_args.mc, "trajectories per point for bound");
  eval_args.points_opt = eval_cmd->add_option(
      "--points", eval_args.points, "cap on evaluation points (0 = all)");
  eval_args.seed_opt =
      eval_cmd->add_option("--seed", eval_args.seed, "master RNG seed");
  eval_args.ema_opt = eval_cmd->add_flag("--ema,!--no-ema", eval_args.use_ema,
                                         "use EMA parameters");

  GradcheckArgs grad_args;
  CLI::App* grad_cmd = app.add_subcommand(
      "gradcheck", "adjoint gradients vs an unrolled autodiff oracle");
  grad_args.common.attach(grad_cmd);
  grad_args.dims_opt =
      grad_cmd->add_option("--dims", grad_args.dims, "state dimensions")
          ->delimiter(',');
  grad_args.steps_opt =
      grad_cmd->add_option("--steps", grad_args.steps, "grid step counts")
          ->delimiter(',');
  grad_args.inst_opt = grad_cmd->add_option("--instances", grad_args.instances,
                                            "instances per combination");
  grad_args.tol_opt = grad_cmd->add_option("--tol", grad_args.tol,
                                           "relative L2 pass threshold");
  grad_args.seed_opt =
      grad_cmd->add_option("--seed", grad_args.seed, "master RNG seed");
  grad_cmd->add_option("--out", grad_args.out, "report CSV");

  GenDataArgs gen_args;
  CLI::App* gen_cmd =
      app.add_subcommand("gen-data", "write a built-in 2-D dataset to CSV");
  gen_args.common.attach(gen_cmd);
  gen_args.kind_opt =
      gen_cmd->add_option("--kind", gen_args.kind, "dataset name");
  gen_args.n_opt = gen_cmd->add_option("--n", gen_args.n, "number of points");
  gen_args.seed_opt =
      gen_cmd->add_option("--seed", gen_args.seed, "generator seed");
  gen_cmd->add_option("--out", gen_args.out, "output CSV")->required();

  DensityArgs density_args;
  CLI::App* density_cmd = app.add_subcommand(
      "export-density", "log-density lattice (and optional SVG heatmap)");
  density_args.common.attach(density_cmd);
  density_cmd
      ->add_option("ckpt", density_args.ckpt_path, "checkpoint file")
      ->required();
  density_cmd->add_option("--out", density_args.out, "lattice CSV");
  density_cmd->add_option("--svg", density_args.svg, "optional heatmap SVG");
  density_args.res_opt = density_cmd->add_option(
      "--res", density_args.res, "lattice resolution per axis");
  density_args.lo_opt =
      density_cmd->add_option("--lo", density_args.lo, "lattice lower bound");
  density_args.hi_opt =
      density_cmd->add_option("--hi", density_args.hi, "lattice upper bound");
  density_args.method_opt = density_cmd->add_option(
      "--method", density_args.method, "ode or nf likelihood");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (sample_cmd->parsed()) return cmd_sample(sample_args);
    if (eval_cmd->parsed()) return cmd_eval_nll(eval_args);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad_args);
    if (gen_cmd->parsed()) return cmd_gen_data(gen_args);
    if (density_cmd->parsed()) return cmd_export_density(density_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
