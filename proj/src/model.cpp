#include "dflow/model.hpp"

#include "dflow/errors.hpp"
#include "dflow/rng.hpp"
#include "dflow/vec.hpp"

namespace dflow {

ModelMode parse_model_mode(const std::string& name) {
  if (name == "diffflow") return ModelMode::diffflow;
  if (name == "ddpm") return ModelMode::ddpm;
  if (name == "nf") return ModelMode::nf;
  throw ConfigError("unknown mode '" + name + "' (expected diffflow, ddpm or nf)");
}

std::string to_string(ModelMode mode) {
  switch (mode) {
    case ModelMode::diffflow: return "diffflow";
    case ModelMode::ddpm: return "ddpm";
    case ModelMode::nf: return "nf";
  }
  throw ContractError("unreachable model mode");
}

void Model::get_params(std::span<double> out) const {
  if (out.size() != param_count()) {
    throw ContractError("Model::get_params: size mismatch");
  }
  copy_to(drift->params(), out.subspan(0, drift->param_count()));
  copy_to(score->params(), out.subspan(drift->param_count()));
}

void Model::set_params(std::span<const double> values) {
  if (values.size() != param_count()) {
    throw ContractError("Model::set_params: size mismatch");
  }
  drift->set_params(values.subspan(0, drift->param_count()));
  score->set_params(values.subspan(drift->param_count()));
}

Model make_model(ModelMode mode, const nn::MlpSpec& drift_spec,
                 const nn::MlpSpec& score_spec, std::uint64_t seed) {
  if (drift_spec.input_dim != score_spec.input_dim) {
    throw ConfigError("drift and score specs disagree on input_dim");
  }
  std::uint64_t drift_seed = Rng::derive_seed(seed, 0x44726674ULL);  // "Drft"
  std::uint64_t score_seed = Rng::derive_seed(seed, 0x53636f72ULL);  // "Scor"
  Model m;
  switch (mode) {
    case ModelMode::diffflow:
    case ModelMode::nf:
      m.drift = std::make_unique<MlpField>(MlpField::init(drift_spec, drift_seed));
      break;
    case ModelMode::ddpm:
      m.drift = std::make_unique<LinearScaleField>(drift_spec.input_dim, -0.5);
      break;
  }
  m.score = std::make_unique<MlpField>(MlpField::init(score_spec, score_seed));
  return m;
}

}  // namespace dflow
