#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "dflow/config.hpp"
#include "dflow/datasets.hpp"
#include "dflow/grid.hpp"
#include "dflow/model.hpp"
#include "dflow/trainer.hpp"

namespace dflow {

// Resolution from the flat key=value config to runnable objects. Every
// command funnels through these helpers so defaults, validation, and the
// recognized-key registry live in one place.

// Recognized config keys. The CLI rejects anything outside this list so a
// typo cannot silently fall back to a default value.
std::span<const std::string_view> known_config_keys();

ModelMode mode_from_config(const KeyValueConfig& cfg);

// Network shape shared by the drift and score nets: model.hidden
// (comma-separated widths) and model.time_embed.
nn::MlpSpec mlp_spec_from_config(const KeyValueConfig& cfg, int dim);

// Constant diffusion level sde.g. nf mode defaults to 0.01 so the shared
// trajectory machinery stays usable while the dynamics approach the
// deterministic flow; other modes default to 1.
double diffusion_from_config(const KeyValueConfig& cfg);

// Consumes train.*, grid.*, sde.g, seed, workers.
TrainConfig train_config_from_config(const KeyValueConfig& cfg);

// Deterministic grid for sampling and evaluation: grid.betas (dt_i =
// beta_i) wins when present, otherwise fixed(grid.steps, grid.horizon,
// grid.beta). steps_override > 0 replaces grid.steps.
TimeGrid eval_grid_from_config(const KeyValueConfig& cfg,
                               int steps_override = 0);

struct ResolvedData {
  bool synthetic = true;
  data::Kind2D kind = data::Kind2D::two_spirals;
  int dim = 2;
  std::unique_ptr<DataSource> source;  // training stream
  std::vector<double> valid, test;     // row-major held-out points
  double rescale_log_det = 0.0;  // add per point to map CSV NLL to raw units
};

// Exactly one of data.kind (built-in 2-D generator) or data.csv (tabular
// file split 70/15/15 by default and standardized on the training split).
ResolvedData data_from_config(const KeyValueConfig& cfg);

// Fresh model per `mode` and `seed`.
Model model_from_config(const KeyValueConfig& cfg, int dim);

}  // namespace dflow
