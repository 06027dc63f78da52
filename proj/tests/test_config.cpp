#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "dflow/config.hpp"
#include "dflow/errors.hpp"
#include "dflow/experiment.hpp"

using namespace dflow;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("dflow_cfg_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config grammar: comments, blanks, trimming, last wins") {
  KeyValueConfig cfg = KeyValueConfig::from_string(
      "# full-line comment\n"
      "\n"
      "  sde.g = 1.5   # trailing comment\n"
      "train.lr=1e-3\n"
      "sde.g = 2.0\n",
      "inline");
  CHECK(cfg.size() == 2);
  CHECK(cfg.get_double("sde.g", 0.0) == 2.0);
  CHECK(cfg.get_double("train.lr", 0.0) == 1e-3);
}

TEST_CASE("config grammar: rejects malformed lines with the line number") {
  CHECK_THROWS_WITH_AS(KeyValueConfig::from_string("just some words\n", "f"),
                       doctest::Contains("f:1"), ConfigError);
  CHECK_THROWS_WITH_AS(
      KeyValueConfig::from_string("ok = 1\nBadKey = 2\n", "f"),
      doctest::Contains("f:2"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::from_string("spaced key = 1\n", "f"),
                  ConfigError);
}

TEST_CASE("config typed getters parse and report the offending key") {
  KeyValueConfig cfg = KeyValueConfig::from_string(
      "a = 2.5\n"
      "b = 41\n"
      "c = yes\n"
      "d = off\n"
      "e = 1,2,3\n"
      "f = 0.5, 1.5\n"
      "g = not_a_number\n");
  CHECK(cfg.get_double("a", 0.0) == 2.5);
  CHECK(cfg.get_long("b", 0) == 41);
  CHECK(cfg.get_int("b", 0) == 41);
  CHECK(cfg.get_bool("c", false));
  CHECK_FALSE(cfg.get_bool("d", true));
  CHECK(cfg.get_int_list("e") == std::vector<int>{1, 2, 3});
  CHECK(cfg.get_double_list("f") == std::vector<double>{0.5, 1.5});
  CHECK(cfg.get_double("missing", -1.0) == -1.0);
  CHECK_THROWS_WITH_AS(cfg.get_double("g", 0.0), doctest::Contains("'g'"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(cfg.get_long("a", 0), doctest::Contains("'a'"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(cfg.require_string("nope"), doctest::Contains("'nope'"),
                       ConfigError);
}

TEST_CASE("config merge precedence: later layers override earlier ones") {
  KeyValueConfig base = KeyValueConfig::from_string("a = 1\nb = 2\n");
  KeyValueConfig layer = KeyValueConfig::from_string("b = 3\nc = 4\n");
  base.merge_from(layer);
  base.set("c", "5");
  CHECK(base.get_int("a", 0) == 1);
  CHECK(base.get_int("b", 0) == 3);
  CHECK(base.get_int("c", 0) == 5);
}

TEST_CASE("config canonical text is sorted and drives a stable hash") {
  KeyValueConfig forward = KeyValueConfig::from_string("a = 1\nz = 2\n");
  KeyValueConfig reverse = KeyValueConfig::from_string("z = 2\na = 1\n");
  CHECK(forward.canonical_text() == "a = 1\nz = 2\n");
  CHECK(forward.hash() == reverse.hash());

  KeyValueConfig changed = forward;
  changed.set("z", "3");
  CHECK(changed.hash() != forward.hash());

  auto echo = forward.echo();
  REQUIRE(echo.size() == 2);
  CHECK(echo[0].first == "a");
  CHECK(echo[1].first == "z");
}

TEST_CASE("config unknown_keys honors exact names and prefix groups") {
  KeyValueConfig cfg = KeyValueConfig::from_string(
      "mode = diffflow\n"
      "train.lr = 0.1\n"
      "train.batch = 8\n"
      "oops = 1\n"
      "trainx.lr = 1\n");
  std::vector<std::string_view> known = {"mode", "train."};
  std::vector<std::string> bad = cfg.unknown_keys(known);
  REQUIRE(bad.size() == 2);
  CHECK(bad[0] == "oops");
  CHECK(bad[1] == "trainx.lr");
}

TEST_CASE("experiment key registry accepts every documented key") {
  KeyValueConfig cfg = KeyValueConfig::from_string(
      "mode = nf\n"
      "seed = 3\n"
      "data.kind = two_spirals\n"
      "train.lr = 1e-3\n"
      "grid.steps = 8\n"
      "sample.lambda = 0.5\n"
      "eval.method = ode\n"
      "density.res = 50\n"
      "gradcheck.tol = 1e-8\n");
  CHECK(cfg.unknown_keys(known_config_keys()).empty());
}

TEST_CASE("make_run_dir: explicit wins, stamped name embeds the hash") {
  fs::path dir = temp_dir("rundir");
  KeyValueConfig cfg = KeyValueConfig::from_string("a = 1\n");

  fs::path explicit_dir = dir / "my_run";
  CHECK(make_run_dir(dir, cfg, explicit_dir) == explicit_dir);
  CHECK(fs::is_directory(explicit_dir));

  fs::path stamped = make_run_dir(dir, cfg, std::nullopt);
  CHECK(fs::is_directory(stamped));
  char suffix[16];
  std::snprintf(suffix, sizeof(suffix), "%08llx",
                static_cast<unsigned long long>(cfg.hash() & 0xffffffffULL));
  std::string name = stamped.filename().string();
  REQUIRE(name.size() > 9);
  CHECK(name.substr(name.size() - 8) == suffix);

  fs::remove_all(dir);
}

TEST_CASE("write_manifest merges command fields with the config echo") {
  fs::path dir = temp_dir("manifest");
  fs::path path = dir / "manifest.json";
  KeyValueConfig cfg = KeyValueConfig::from_string("sde.g = 1.0\nseed = 9\n");
  write_manifest(path, "train", cfg, R"({"rows": 12})");

  std::ifstream in(path);
  nlohmann::json doc = nlohmann::json::parse(in);
  CHECK(doc["command"] == "train");
  CHECK(doc["rows"] == 12);
  CHECK(doc["config"]["sde.g"] == "1.0");
  CHECK(doc["config"]["seed"] == "9");
  std::string hash = doc["config_hash"];
  CHECK(hash.size() == 16);
  std::string created = doc["created_utc"];
  CHECK(created.back() == 'Z');

  fs::remove_all(dir);
}

TEST_CASE("experiment config resolves grids, models, and datasets") {
  KeyValueConfig cfg = KeyValueConfig::from_string(
      "mode = diffflow\n"
      "data.kind = checkerboard\n"
      "data.val_n = 32\n"
      "data.test_n = 48\n"
      "model.hidden = 8,8\n"
      "model.time_embed = 4\n"
      "grid.steps = 6\n"
      "grid.horizon = 0.25\n"
      "grid.beta = 1.0\n");
  ResolvedData data = data_from_config(cfg);
  CHECK(data.synthetic);
  CHECK(data.dim == 2);
  CHECK(data.valid.size() == 64);
  CHECK(data.test.size() == 96);
  CHECK(data.rescale_log_det == 0.0);

  TimeGrid grid = eval_grid_from_config(cfg);
  CHECK(grid.steps() == 6);
  CHECK(grid.horizon() == doctest::Approx(0.25));
  // beta = 1 means uniform spacing.
  CHECK(grid.dt(0) == doctest::Approx(0.25 / 6));

  Model model = model_from_config(cfg, data.dim);
  CHECK(model.dim() == 2);
  CHECK(model.param_count() > 0);

  // steps_override swaps the step count but keeps the horizon.
  TimeGrid fine = eval_grid_from_config(cfg, 24);
  CHECK(fine.steps() == 24);
  CHECK(fine.horizon() == doctest::Approx(0.25));
}

TEST_CASE("experiment config requires exactly one data source") {
  CHECK_THROWS_AS(data_from_config(KeyValueConfig::from_string("mode = nf\n")),
                  ConfigError);
  CHECK_THROWS_AS(
      data_from_config(KeyValueConfig::from_string(
          "data.kind = two_spirals\ndata.csv = some.csv\n")),
      ConfigError);
}

TEST_CASE("grid.betas overrides the geometric grid construction") {
  KeyValueConfig cfg = KeyValueConfig::from_string(
      "grid.betas = 0.1, 0.2, 0.3\n"
      "grid.steps = 99\n");
  TimeGrid grid = eval_grid_from_config(cfg);
  CHECK(grid.steps() == 3);
  CHECK(grid.dt(0) == doctest::Approx(0.1));
  CHECK(grid.dt(2) == doctest::Approx(0.3));
  CHECK(grid.horizon() == doctest::Approx(0.6));
}
