#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dflow/adam.hpp"
#include "dflow/model.hpp"
#include "dflow/rng.hpp"

namespace dflow {

// Batch provider. sample_batch must be deterministic given the rng it is
// handed; the trainer passes iteration-keyed substreams so results never
// depend on evaluation order or worker count.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual int dim() const = 0;
  // Appends n * dim() values (row-major) into out, which is pre-cleared.
  virtual void sample_batch(std::size_t n, Rng& rng,
                            std::vector<double>& out) const = 0;
};

// Step-count schedule: the entry with the largest start_iteration <= current
// iteration is active. Coarse-to-fine refinement keeps early iterations
// cheap.
struct ProgressivePhase {
  long start_iteration = 0;
  int steps = 20;
};

struct TrainConfig {
  long iterations = 4000;
  int batch_size = 128;
  AdamConfig adam;
  double ema_decay = 0.999;
  double grad_clip = 100.0;  // global L2 norm; <= 0 disables
  double horizon = 0.5;
  double grid_beta = 0.9;
  bool flexible_grid = false;
  std::vector<ProgressivePhase> phases = {{0, 20}};
  // Non-empty: every iteration uses the grid with dt_i = step_betas[i]
  // (variance-schedule style), overriding horizon/grid_beta/phases.
  std::vector<double> step_betas;
  double g = 1.0;
  std::uint64_t seed = 0;
  int workers = 1;
  long log_every = 50;
  long checkpoint_every = 1000;
  // Abort after this many consecutive failed iterations (non-finite
  // gradients or diverged trajectories).
  int max_consecutive_failures = 3;

  void validate() const;
  int steps_at(long iteration) const;
};

struct TrainResult {
  long iterations_run = 0;
  double final_loss = 0.0;
  std::vector<double> final_params;  // packed [drift | score]
  std::vector<double> ema_params;
  long skipped_iterations = 0;
  std::filesystem::path log_path;
  std::filesystem::path checkpoint_path;
};

// Serialized optimizer snapshot ("DNFCKPT1" container, see README).
struct Checkpoint {
  long iteration = 0;
  ModelMode mode = ModelMode::diffflow;
  std::optional<nn::MlpSpec> drift_spec;  // absent for frozen drifts
  nn::MlpSpec score_spec;
  std::vector<double> params;  // packed
  std::vector<double> ema_params;
  AdamState adam;
  std::vector<std::pair<std::string, std::string>> config_echo;

  // Rebuilds the model this checkpoint was taken from (current parameters,
  // not the EMA ones).
  Model restore_model() const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Runs the optimization loop, appending to run_dir/training_log.csv and
// refreshing run_dir/checkpoint.bin every checkpoint_every iterations. The
// model is updated in place. `mode` only tags checkpoints so restore can
// rebuild the right drift. `resume` continues from a loaded snapshot and
// reproduces the uninterrupted run bit-for-bit (all randomness is keyed by
// iteration index, so nothing depends on consumed rng state).
TrainResult train(Model& model, ModelMode mode, const DataSource& data,
                  const TrainConfig& cfg, const std::filesystem::path& run_dir,
                  const Checkpoint* resume = nullptr,
                  const std::vector<std::pair<std::string, std::string>>&
                      config_echo = {});

}  // namespace dflow
