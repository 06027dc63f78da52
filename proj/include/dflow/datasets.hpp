#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dflow/rng.hpp"
#include "dflow/trainer.hpp"

namespace dflow::data {

// Built-in 2-D distributions. Geometry constants (spans, ring radii, noise
// widths) are fixed here and documented in the README; held-out NLL numbers
// are only comparable against these exact constructions.
enum class Kind2D {
  two_spirals,
  checkerboard,
  four_rings,
  sharp_olympics,
  olympics,
  fractal_tree,
  carpet,
  gaussian_mixture,
};

Kind2D parse_kind(const std::string& name);  // throws ConfigError
std::string to_string(Kind2D kind);
const std::vector<std::string>& kind_names();

// One draw; out must have size 2.
void sample_point(Kind2D kind, Rng& rng, std::span<double> out);

// n x 2 row-major. Row i is drawn from Rng(seed).child(i), so any prefix of
// a larger generation is reproducible and rows are order-independent.
std::vector<double> generate(Kind2D kind, std::size_t n, std::uint64_t seed);

// Writes points.csv (header x_1,x_2) plus a JSON manifest capturing the
// generator spec, so a dataset directory is self-describing.
void write_dataset(const std::filesystem::path& csv_path,
                   const std::filesystem::path& manifest_path, Kind2D kind,
                   std::size_t n, std::uint64_t seed);

class SyntheticSource final : public DataSource {
 public:
  explicit SyntheticSource(Kind2D kind) : kind_(kind) {}
  int dim() const override { return 2; }
  void sample_batch(std::size_t n, Rng& rng,
                    std::vector<double>& out) const override;

 private:
  Kind2D kind_;
};

// Draws rows (with replacement) from an in-memory matrix.
class MatrixSource final : public DataSource {
 public:
  MatrixSource(std::vector<double> values, int dim);
  int dim() const override { return dim_; }
  std::size_t rows() const { return values_.size() / static_cast<std::size_t>(dim_); }
  void sample_batch(std::size_t n, Rng& rng,
                    std::vector<double>& out) const override;
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
  int dim_;
};

// Tabular CSV pipeline: shuffled split, then per-column standardization fit
// on the training split only. rescale_log_det = sum_j log(std_j) converts
// normalized-space NLL back to original units.
struct TabularSplits {
  int dim = 0;
  std::vector<double> train, valid, test;  // normalized, row-major
  std::vector<double> mean, stddev;
  double rescale_log_det = 0.0;
};

TabularSplits load_tabular(const std::filesystem::path& path, double train_frac,
                           double valid_frac, std::uint64_t seed);

}  // namespace dflow::data
