#pragma once

#include <memory>
#include <span>
#include <string>

#include "dflow/field.hpp"

namespace dflow {

enum class ModelMode { diffflow, ddpm, nf };

ModelMode parse_model_mode(const std::string& name);   // throws ConfigError
std::string to_string(ModelMode mode);

// Drift/score pair driving the forward and backward dynamics. Trainable
// parameters are exposed as one flat vector packed [drift | score]; modes
// with a frozen drift simply contribute zero drift parameters.
struct Model {
  std::unique_ptr<VectorField> drift;
  std::unique_ptr<VectorField> score;

  int dim() const { return drift->dim(); }
  std::size_t drift_param_count() const { return drift->param_count(); }
  std::size_t param_count() const {
    return drift->param_count() + score->param_count();
  }

  void get_params(std::span<double> out) const;
  void set_params(std::span<const double> values);

  std::span<double> drift_part(std::span<double> packed) const {
    return packed.subspan(0, drift->param_count());
  }
  std::span<double> score_part(std::span<double> packed) const {
    return packed.subspan(drift->param_count());
  }

  Model clone() const { return Model{drift->clone(), score->clone()}; }
};

// diffflow: trainable MLP drift and score (independent parameters; the score
// network is seeded from a derived stream so the pair is reproducible from
// one seed). ddpm: frozen linear drift -x/2, trainable score. nf mode shares
// the diffflow structure; the g -> 0 behaviour is a schedule choice.
Model make_model(ModelMode mode, const nn::MlpSpec& drift_spec,
                 const nn::MlpSpec& score_spec, std::uint64_t seed);

}  // namespace dflow
