#include "dflow/field.hpp"

#include "dflow/errors.hpp"
#include "dflow/vec.hpp"

namespace dflow {

MlpField::MlpField(nn::MlpSpec spec, nn::ParamVector params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (params_.layout() != nn::layout(spec_)) {
    throw ContractError("MlpField: params do not match spec layout");
  }
  ws_.resize(spec_);
  grad_scratch_ = nn::ParamVector::zeros(nn::layout(spec_));
}

MlpField MlpField::init(const nn::MlpSpec& spec, std::uint64_t seed) {
  return MlpField(spec, nn::init_params(spec, seed));
}

void MlpField::set_params(std::span<const double> values) {
  if (values.size() != params_.size()) {
    throw ContractError("MlpField::set_params: size mismatch");
  }
  copy_to(values, params_.values());
}

void MlpField::eval(std::span<const double> x, double t,
                    std::span<double> out) const {
  nn::forward(spec_, params_, x, t, out, ws_);
}

void MlpField::vjp(std::span<const double> x, double t,
                   std::span<const double> cotangent, std::span<double> grad_x,
                   std::span<double> grad_params) const {
  if (grad_params.empty()) {
    nn::vjp(spec_, params_, x, t, cotangent, grad_x, nullptr, ws_);
    return;
  }
  if (grad_params.size() != params_.size()) {
    throw ContractError("MlpField::vjp: grad_params size mismatch");
  }
  // nn::vjp accumulates into a ParamVector; route through scratch then add.
  fill(grad_scratch_.values(), 0.0);
  nn::vjp(spec_, params_, x, t, cotangent, grad_x, &grad_scratch_, ws_);
  axpy(1.0, grad_scratch_.values(), grad_params);
}

std::unique_ptr<VectorField> MlpField::clone() const {
  return std::make_unique<MlpField>(spec_, params_);
}

}  // namespace dflow
