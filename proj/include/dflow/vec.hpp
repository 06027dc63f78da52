#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dflow/errors.hpp"

namespace dflow {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(std::span<double> x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline void fill(std::span<double> x, double value) {
  for (double& v : x) v = value;
}

inline void copy_to(std::span<const double> src, std::span<double> dst) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Row view into a flat row-major (rows x dim) matrix.
inline std::span<double> row(std::vector<double>& data, std::size_t dim,
                             std::size_t i) {
  return std::span<double>(data.data() + i * dim, dim);
}

inline std::span<const double> row(const std::vector<double>& data,
                                   std::size_t dim, std::size_t i) {
  return std::span<const double>(data.data() + i * dim, dim);
}

}  // namespace dflow
