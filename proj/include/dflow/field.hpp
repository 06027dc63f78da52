#pragma once

#include <functional>
#include <memory>
#include <span>

#include "dflow/mlp.hpp"

namespace dflow {

// Time-conditioned vector field R^d x [0,T] -> R^d with first-order VJPs.
// Fields may hold trainable parameters (exposed as one flat span) or none.
//
// eval/vjp use internal scratch, so concurrent calls on one instance are not
// safe; workers should clone(). Results depend only on (params, x, t).
class VectorField {
 public:
  virtual ~VectorField() = default;

  virtual int dim() const = 0;
  virtual std::size_t param_count() const = 0;
  virtual std::span<const double> params() const = 0;
  virtual void set_params(std::span<const double> values) = 0;

  virtual void eval(std::span<const double> x, double t,
                    std::span<double> out) const = 0;

  // grad_x (overwritten) = c^T df/dx; grad_params (accumulated) += c^T df/dp.
  // Either output may be empty to skip it.
  virtual void vjp(std::span<const double> x, double t,
                   std::span<const double> cotangent, std::span<double> grad_x,
                   std::span<double> grad_params) const = 0;

  virtual std::unique_ptr<VectorField> clone() const = 0;
};

// Trainable MLP field.
class MlpField final : public VectorField {
 public:
  MlpField(nn::MlpSpec spec, nn::ParamVector params);
  static MlpField init(const nn::MlpSpec& spec, std::uint64_t seed);

  int dim() const override { return spec_.input_dim; }
  std::size_t param_count() const override { return params_.size(); }
  std::span<const double> params() const override { return params_.values(); }
  void set_params(std::span<const double> values) override;
  void eval(std::span<const double> x, double t,
            std::span<double> out) const override;
  void vjp(std::span<const double> x, double t, std::span<const double> cotangent,
           std::span<double> grad_x, std::span<double> grad_params) const override;
  std::unique_ptr<VectorField> clone() const override;

  const nn::MlpSpec& spec() const { return spec_; }
  const nn::ParamVector& param_vector() const { return params_; }

 private:
  nn::MlpSpec spec_;
  nn::ParamVector params_;
  mutable nn::MlpWorkspace ws_;
  mutable nn::ParamVector grad_scratch_;
};

// f(x, t) = scale * x. No parameters. scale = -1/2 gives the standard
// variance-preserving drift.
class LinearScaleField final : public VectorField {
 public:
  LinearScaleField(int dim, double scale) : dim_(dim), scale_(scale) {}

  int dim() const override { return dim_; }
  std::size_t param_count() const override { return 0; }
  std::span<const double> params() const override { return {}; }
  void set_params(std::span<const double>) override {}
  void eval(std::span<const double> x, double, std::span<double> out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale_ * x[i];
  }
  void vjp(std::span<const double>, double, std::span<const double> cotangent,
           std::span<double> grad_x, std::span<double>) const override {
    for (std::size_t i = 0; i < grad_x.size(); ++i) grad_x[i] = scale_ * cotangent[i];
  }
  std::unique_ptr<VectorField> clone() const override {
    return std::make_unique<LinearScaleField>(*this);
  }

  double scale() const { return scale_; }

 private:
  int dim_;
  double scale_;
};

class ZeroField final : public VectorField {
 public:
  explicit ZeroField(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  std::size_t param_count() const override { return 0; }
  std::span<const double> params() const override { return {}; }
  void set_params(std::span<const double>) override {}
  void eval(std::span<const double>, double, std::span<double> out) const override {
    for (double& v : out) v = 0.0;
  }
  void vjp(std::span<const double>, double, std::span<const double>,
           std::span<double> grad_x, std::span<double>) const override {
    for (double& v : grad_x) v = 0.0;
  }
  std::unique_ptr<VectorField> clone() const override {
    return std::make_unique<ZeroField>(*this);
  }

 private:
  int dim_;
};

// Exact score of a Gaussian with per-coordinate time-dependent mean and a
// shared isotropic variance: s_c(x, t) = -(x_c - mean(t, c)) / var(t).
// Used by analytic fixtures.
class GaussianScoreField final : public VectorField {
 public:
  using MeanFn = std::function<double(double, int)>;  // (time, coordinate)
  using VarFn = std::function<double(double)>;

  GaussianScoreField(int dim, MeanFn mean, VarFn var)
      : dim_(dim), mean_(std::move(mean)), var_(std::move(var)) {}

  int dim() const override { return dim_; }
  std::size_t param_count() const override { return 0; }
  std::span<const double> params() const override { return {}; }
  void set_params(std::span<const double>) override {}
  void eval(std::span<const double> x, double t, std::span<double> out) const override {
    double v = var_(t);
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = -(x[i] - mean_(t, static_cast<int>(i))) / v;
    }
  }
  void vjp(std::span<const double>, double t, std::span<const double> cotangent,
           std::span<double> grad_x, std::span<double>) const override {
    double v = var_(t);
    for (std::size_t i = 0; i < grad_x.size(); ++i) grad_x[i] = -cotangent[i] / v;
  }
  std::unique_ptr<VectorField> clone() const override {
    return std::make_unique<GaussianScoreField>(*this);
  }

  double mean_at(double t, int coord) const { return mean_(t, coord); }
  double var_at(double t) const { return var_(t); }

 private:
  int dim_;
  MeanFn mean_;
  VarFn var_;
};

}  // namespace dflow
