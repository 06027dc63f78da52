// End-to-end checks of the command-line binary: artifact layout, exit
// codes, determinism contracts, and the numeric trivia each command must
// reproduce. The binary path is injected at configure time.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "dflow/csv.hpp"
#include "dflow/datasets.hpp"
#include "dflow/mlp.hpp"
#include "dflow/model.hpp"
#include "dflow/trainer.hpp"

using namespace dflow;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& cwd,
            const std::string& stdout_file = "out.txt") {
  std::string cmd = "cd '" + cwd.string() + "' && '" + DFLOW_CLI_PATH + "' " +
                    args + " > " + stdout_file + " 2> err.txt";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

// One workspace for the whole binary, with a small model trained once and
// reused by the sampling / evaluation cases.
struct Workspace {
  fs::path dir;
  fs::path train_cfg;
  fs::path ckpt;          // 200-iteration run
  fs::path identity_ckpt; // freshly initialized model, drift = score = 0

  Workspace() {
    dir = fs::temp_directory_path() / "dflow_cli_ws";
    fs::remove_all(dir);
    fs::create_directories(dir);

    train_cfg = dir / "train.cfg";
    std::ofstream cfg(train_cfg);
    cfg << "mode = diffflow\n"
           "seed = 7\n"
           "data.kind = four_rings\n"
           "model.hidden = 16,16\n"
           "model.time_embed = 8\n"
           "grid.steps = 8\n"
           "grid.horizon = 0.5\n"
           "grid.beta = 0.9\n"
           "sde.g = 1.0\n"
           "train.iterations = 200\n"
           "train.batch = 64\n"
           "train.lr = 2e-3\n"
           "train.log_every = 10\n";
    cfg.close();

    REQUIRE(run_cli("train -c train.cfg --run-dir main_run", dir) == 0);
    ckpt = dir / "main_run" / "checkpoint.bin";
    REQUIRE(fs::exists(ckpt));

    nn::MlpSpec spec;
    spec.input_dim = 2;
    spec.hidden_widths = {8};
    spec.time_embed_dim = 4;
    Model model = make_model(ModelMode::diffflow, spec, spec, 1);
    Checkpoint identity;
    identity.mode = ModelMode::diffflow;
    identity.drift_spec = spec;
    identity.score_spec = spec;
    identity.params.resize(model.param_count());
    model.get_params(identity.params);
    identity.ema_params = identity.params;
    identity.adam.resize(identity.params.size());
    identity_ckpt = dir / "identity.bin";
    save_checkpoint(identity_ckpt, identity);
  }
};

Workspace& ws() {
  static Workspace instance;
  return instance;
}

}  // namespace

TEST_CASE("train writes artifacts and the loss improves over 200 iterations") {
  Workspace& w = ws();
  fs::path run = w.dir / "main_run";

  CsvTable log = read_csv(run / "training_log.csv");
  REQUIRE(log.rows() >= 2);
  std::size_t loss_col = 0;
  bool found = false;
  for (std::size_t c = 0; c < log.header.size(); ++c) {
    if (log.header[c] == "loss") {
      loss_col = c;
      found = true;
    }
  }
  REQUIRE(found);
  double first = log.values[loss_col];
  double last = log.values[(log.rows() - 1) * log.cols + loss_col];
  CHECK(last < first);

  nlohmann::json manifest = read_json(run / "manifest.json");
  CHECK(manifest["command"] == "train");
  CHECK(manifest["config"]["data.kind"] == "four_rings");
  CHECK(manifest["config"]["seed"] == "7");
  CHECK(manifest["dim"] == 2);
}

TEST_CASE("train twice with identical config and seed gives identical checkpoints") {
  Workspace& w = ws();
  std::string base = "train -c train.cfg --set train.iterations=30 --run-dir ";
  REQUIRE(run_cli(base + "det_a", w.dir) == 0);
  REQUIRE(run_cli(base + "det_b", w.dir) == 0);
  CHECK(slurp(w.dir / "det_a" / "checkpoint.bin") ==
        slurp(w.dir / "det_b" / "checkpoint.bin"));
}

TEST_CASE("resume continues the iteration count and reproduces a straight run") {
  Workspace& w = ws();
  REQUIRE(run_cli(
              "train -c train.cfg --set train.iterations=30 --run-dir half",
              w.dir) == 0);
  Checkpoint half = load_checkpoint(w.dir / "half" / "checkpoint.bin");
  CHECK(half.iteration == 30);

  REQUIRE(run_cli("train -c train.cfg --set train.iterations=60 "
                  "--resume half/checkpoint.bin --run-dir resumed",
                  w.dir) == 0);
  Checkpoint resumed = load_checkpoint(w.dir / "resumed" / "checkpoint.bin");
  CHECK(resumed.iteration == 60);

  REQUIRE(run_cli(
              "train -c train.cfg --set train.iterations=60 --run-dir straight",
              w.dir) == 0);
  CHECK(slurp(w.dir / "resumed" / "checkpoint.bin") ==
        slurp(w.dir / "straight" / "checkpoint.bin"));
}

TEST_CASE("sample: lambda 0 is deterministic and row count matches n") {
  Workspace& w = ws();
  std::string base =
      "sample main_run/checkpoint.bin --lambda 0 --seed 5 --n 64 --out ";
  REQUIRE(run_cli(base + "s0a.csv", w.dir) == 0);
  REQUIRE(run_cli(base + "s0b.csv", w.dir) == 0);
  CHECK(slurp(w.dir / "s0a.csv") == slurp(w.dir / "s0b.csv"));

  REQUIRE(run_cli("sample main_run/checkpoint.bin --steps 30 --n 50 "
                  "--seed 1 --out s30.csv",
                  w.dir) == 0);
  CsvTable table = read_csv(w.dir / "s30.csv");
  CHECK(table.rows() == 50);
  CHECK(table.cols == 2);

  nlohmann::json manifest = read_json(w.dir / "s30.csv.manifest.json");
  CHECK(manifest["command"] == "sample");
  CHECK(manifest["config"]["sample.steps"] == "30");
  CHECK(manifest["rows"] == 50);
}

TEST_CASE("eval-nll: identity model at the origin gives the standard normal value") {
  Workspace& w = ws();
  {
    std::ofstream points(w.dir / "origin.csv");
    points << "x_1,x_2\n0,0\n";
  }
  REQUIRE(run_cli("eval-nll identity.bin --data origin.csv --method ode "
                  "--out id_nll.csv",
                  w.dir) == 0);
  CsvTable report = read_csv(w.dir / "id_nll.csv");
  REQUIRE(report.rows() == 1);
  REQUIRE(report.cols == 2);
  double nats = report.values[1];
  CHECK(nats == doctest::Approx(std::log(2.0 * M_PI)).epsilon(1e-4));

  nlohmann::json manifest = read_json(w.dir / "id_nll.csv.manifest.json");
  double bits = manifest["bits_per_dim"];
  CHECK(bits == doctest::Approx(std::log(2.0 * M_PI) / (2.0 * std::log(2.0)))
                    .epsilon(1e-4));
}

TEST_CASE("eval-nll: summary mean equals the mean of the per-row values") {
  Workspace& w = ws();
  REQUIRE(run_cli("gen-data --kind four_rings --n 6 --seed 3 --out pts.csv",
                  w.dir) == 0);
  REQUIRE(run_cli("eval-nll main_run/checkpoint.bin --data pts.csv "
                  "--method nf --out nf_nll.csv",
                  w.dir) == 0);
  CsvTable report = read_csv(w.dir / "nf_nll.csv");
  REQUIRE(report.rows() == 6);
  double mean = 0.0;
  for (std::size_t r = 0; r < report.rows(); ++r) {
    mean += report.values[r * report.cols + 1];
  }
  mean /= static_cast<double>(report.rows());

  nlohmann::json manifest = read_json(w.dir / "nf_nll.csv.manifest.json");
  double reported = manifest["mean_nll_nats"];
  CHECK(reported == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("eval-nll: bound method stays above the exact value within MC error") {
  Workspace& w = ws();
  REQUIRE(run_cli("eval-nll main_run/checkpoint.bin --data pts.csv "
                  "--method ode --tol 1e-6 --out ode_nll.csv",
                  w.dir) == 0);
  REQUIRE(run_cli("eval-nll main_run/checkpoint.bin --data pts.csv "
                  "--method bound --mc 200 --seed 2 --out b_nll.csv",
                  w.dir) == 0);
  CsvTable exact = read_csv(w.dir / "ode_nll.csv");
  CsvTable bound = read_csv(w.dir / "b_nll.csv");
  REQUIRE(exact.rows() == bound.rows());
  REQUIRE(bound.cols == 3);
  for (std::size_t r = 0; r < exact.rows(); ++r) {
    double ode = exact.values[r * exact.cols + 1];
    double mean = bound.values[r * bound.cols + 1];
    double se = bound.values[r * bound.cols + 2];
    CHECK(mean >= ode - 3.0 * se);
  }
}

TEST_CASE("gradcheck is reproducible and fails loudly on an impossible tolerance") {
  Workspace& w = ws();
  std::string base = "gradcheck --dims 2 --steps 4,8 --instances 2 --seed 11 ";
  REQUIRE(run_cli(base + "--out gc_a.csv", w.dir) == 0);
  REQUIRE(run_cli(base + "--out gc_b.csv", w.dir) == 0);
  CHECK(slurp(w.dir / "gc_a.csv") == slurp(w.dir / "gc_b.csv"));

  CHECK(run_cli(base + "--tol 1e-18 --out gc_fail.csv", w.dir) == 1);
  CsvTable report = read_csv(w.dir / "gc_fail.csv");
  bool any_fail = false;
  for (std::size_t r = 0; r < report.rows(); ++r) {
    if (report.values[r * report.cols + 5] == 0.0) any_fail = true;
  }
  CHECK(any_fail);
}

TEST_CASE("gen-data reproduces the library generator bit for bit") {
  Workspace& w = ws();
  REQUIRE(run_cli("gen-data --kind two_spirals --n 20 --seed 11 --out g.csv",
                  w.dir) == 0);
  CsvTable table = read_csv(w.dir / "g.csv");
  std::vector<double> expect = data::generate(data::Kind2D::two_spirals, 20, 11);
  REQUIRE(table.values.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    CHECK(table.values[i] == expect[i]);
  }
  nlohmann::json manifest = read_json(w.dir / "g.csv.manifest.json");
  CHECK(manifest["command"] == "gen-data");
  CHECK(manifest["kind"] == "two_spirals");
}

TEST_CASE("export-density: lattice row count, finite values, well-formed SVG") {
  Workspace& w = ws();
  REQUIRE(run_cli("export-density main_run/checkpoint.bin --res 8 "
                  "--method nf --out den.csv --svg den.svg",
                  w.dir) == 0);
  CsvTable table = read_csv(w.dir / "den.csv");
  CHECK(table.rows() == 64);
  REQUIRE(table.cols == 3);
  for (double v : table.values) CHECK(std::isfinite(v));

  std::string svg = slurp(w.dir / "den.svg");
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  std::size_t rects = 0;
  for (std::size_t pos = svg.find("<rect"); pos != std::string::npos;
       pos = svg.find("<rect", pos + 1)) {
    ++rects;
  }
  CHECK(rects == 64);
}

TEST_CASE("exit codes distinguish usage, numeric, and I/O failures") {
  Workspace& w = ws();
  // Usage errors -> 2.
  CHECK(run_cli("train -c train.cfg --set bogus.key=1 --run-dir x1", w.dir) == 2);
  CHECK(run_cli("train -c train.cfg --set nodelimiter --run-dir x2", w.dir) == 2);
  CHECK(run_cli("no-such-command", w.dir) == 2);
  CHECK(run_cli("sample main_run/checkpoint.bin --lambda 2 --out x.csv",
                w.dir) == 2);
  CHECK(run_cli("eval-nll main_run/checkpoint.bin --data pts.csv "
                "--method wat --out x.csv",
                w.dir) == 2);
  // Missing input file -> 4.
  CHECK(run_cli("sample missing.bin --out x.csv", w.dir) == 4);
  // Unreachable integrator tolerance -> numeric divergence, 3.
  CHECK(run_cli("eval-nll main_run/checkpoint.bin --data pts.csv "
                "--method ode --tol 1e-300 --out x.csv",
                w.dir) == 3);
  std::string err = slurp(w.dir / "err.txt");
  CHECK(err.find("best-effort") != std::string::npos);
}
