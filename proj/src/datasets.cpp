#include "dflow/datasets.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "dflow/csv.hpp"
#include "dflow/errors.hpp"

namespace dflow::data {

namespace {

constexpr double kPi = std::numbers::pi;

// two_spirals: arc parameter n = sqrt(u) * 3 pi, jittered archimedean arms
// mirrored through the origin, then scaled to put the differential entropy
// comfortably below 2 nats.
constexpr double kSpiralScale = 0.6;

// checkerboard: 4x4 alternating cells spanning [-1.7, 1.7]^2.
constexpr double kBoardCell = 0.85;

// ring families: unit radius; sharp variants use a 0.001 radial sigma.
constexpr double kRingSigmaSharp = 0.001;
constexpr double kRingSigmaSoft = 0.05;

void spiral_point(Rng& rng, std::span<double> out) {
  double n = std::sqrt(rng.uniform()) * 3.0 * kPi;
  double dx = -std::cos(n) * n + rng.uniform() * 0.5;
  double dy = std::sin(n) * n + rng.uniform() * 0.5;
  double sign = rng.uniform_index(2) == 0 ? 1.0 : -1.0;
  out[0] = (sign * dx / 3.0 + 0.1 * rng.normal()) * kSpiralScale;
  out[1] = (sign * dy / 3.0 + 0.1 * rng.normal()) * kSpiralScale;
}

void checkerboard_point(Rng& rng, std::span<double> out) {
  double x1 = rng.uniform(-2.0, 2.0);
  double u = rng.uniform();
  double shift = -2.0 * static_cast<double>(rng.uniform_index(2));
  int col = static_cast<int>(std::floor(x1));
  double parity = static_cast<double>(((col % 2) + 2) % 2);
  double x2 = u + shift + parity;
  out[0] = x1 * kBoardCell;
  out[1] = x2 * kBoardCell;
}

struct RingSpec {
  const double (*centers)[2];
  std::size_t count;
  double sigma;
};

void ring_point(const RingSpec& spec, Rng& rng, std::span<double> out) {
  std::size_t c = rng.uniform_index(spec.count);
  double theta = rng.uniform(0.0, 2.0 * kPi);
  double r = 1.0 + spec.sigma * rng.normal();
  out[0] = spec.centers[c][0] + r * std::cos(theta);
  out[1] = spec.centers[c][1] + r * std::sin(theta);
}

constexpr double kFourRingCenters[4][2] = {
    {-2.0, -2.0}, {-2.0, 2.0}, {2.0, -2.0}, {2.0, 2.0}};
constexpr double kOlympicCenters[5][2] = {{-2.4, 0.5},
                                          {0.0, 0.5},
                                          {2.4, 0.5},
                                          {-1.2, -0.5},
                                          {1.2, -0.5}};

void mixture_point(Rng& rng, std::span<double> out) {
  double mx = rng.uniform_index(2) == 0 ? -2.0 : 2.0;
  out[0] = mx + 0.5 * rng.normal();
  out[1] = 0.5 * rng.normal();
}

// Six-map branching IFS run as a fresh chaos-game chain per sample; the
// contraction factors make 48 applications enough to land on the attractor
// to double precision. Output is recentred from the attractor's bounding
// box (x in [-0.50, 0.81], y in [0, 1.99]) so the canopy spans roughly
// [-2, 2] x [-3, 3].
void tree_point(Rng& rng, std::span<double> out) {
  static constexpr double kMaps[6][7] = {
      // a, b, c, d, e, f, cumulative probability
      {0.05, 0.0, 0.0, 0.6, 0.0, 0.0, 0.1},
      {0.05, 0.0, 0.0, -0.5, 0.0, 1.0, 0.2},
      {0.46, -0.15, 0.39, 0.38, 0.0, 0.6, 0.4},
      {0.47, -0.15, 0.17, 0.42, 0.0, 1.1, 0.6},
      {0.43, 0.28, -0.25, 0.45, 0.0, 1.0, 0.8},
      {0.42, 0.26, -0.35, 0.31, 0.0, 0.7, 1.0},
  };
  double x = 0.0, y = 1.0;
  for (int i = 0; i < 48; ++i) {
    double u = rng.uniform();
    const double* m = kMaps[5];
    for (const auto& cand : kMaps) {
      if (u < cand[6]) {
        m = cand;
        break;
      }
    }
    double nx = m[0] * x + m[1] * y + m[4];
    double ny = m[2] * x + m[3] * y + m[5];
    x = nx;
    y = ny;
  }
  out[0] = (x - 0.155) * 3.0;
  out[1] = (y - 1.0) * 3.0;
}

// Eight-map third-scale IFS whose attractor is the unit-square carpet,
// stretched to [-3, 3]^2.
void carpet_point(Rng& rng, std::span<double> out) {
  static constexpr int kCells[8][2] = {{0, 0}, {1, 0}, {2, 0}, {0, 1},
                                       {2, 1}, {0, 2}, {1, 2}, {2, 2}};
  double x = 0.5, y = 0.5;
  for (int i = 0; i < 40; ++i) {
    const int* c = kCells[rng.uniform_index(8)];
    x = (x + c[0]) / 3.0;
    y = (y + c[1]) / 3.0;
  }
  out[0] = (x - 0.5) * 6.0;
  out[1] = (y - 0.5) * 6.0;
}

}  // namespace

Kind2D parse_kind(const std::string& name) {
  const auto& names = kind_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<Kind2D>(i);
  }
  std::string all;
  for (const auto& n : names) {
    if (!all.empty()) all += ", ";
    all += n;
  }
  throw ConfigError("unknown dataset '" + name + "' (expected one of: " + all + ")");
}

std::string to_string(Kind2D kind) {
  return kind_names()[static_cast<std::size_t>(kind)];
}

const std::vector<std::string>& kind_names() {
  static const std::vector<std::string> names = {
      "two_spirals", "checkerboard", "four_rings",      "sharp_olympics",
      "olympics",    "fractal_tree", "carpet",          "gaussian_mixture"};
  return names;
}

void sample_point(Kind2D kind, Rng& rng, std::span<double> out) {
  if (out.size() != 2) throw ContractError("sample_point: out must have size 2");
  switch (kind) {
    case Kind2D::two_spirals:
      return spiral_point(rng, out);
    case Kind2D::checkerboard:
      return checkerboard_point(rng, out);
    case Kind2D::four_rings:
      return ring_point({kFourRingCenters, 4, kRingSigmaSharp}, rng, out);
    case Kind2D::sharp_olympics:
      return ring_point({kOlympicCenters, 5, kRingSigmaSharp}, rng, out);
    case Kind2D::olympics:
      return ring_point({kOlympicCenters, 5, kRingSigmaSoft}, rng, out);
    case Kind2D::fractal_tree:
      return tree_point(rng, out);
    case Kind2D::carpet:
      return carpet_point(rng, out);
    case Kind2D::gaussian_mixture:
      return mixture_point(rng, out);
  }
  throw ContractError("unreachable dataset kind");
}

std::vector<double> generate(Kind2D kind, std::size_t n, std::uint64_t seed) {
  std::vector<double> out(n * 2);
  Rng root(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Rng child = root.child(i);
    sample_point(kind, child, std::span<double>(out).subspan(i * 2, 2));
  }
  return out;
}

void write_dataset(const std::filesystem::path& csv_path,
                   const std::filesystem::path& manifest_path, Kind2D kind,
                   std::size_t n, std::uint64_t seed) {
  std::vector<double> points = generate(kind, n, seed);
  write_csv(csv_path, {"x_1", "x_2"}, points, 2);
  nlohmann::json manifest = {{"kind", to_string(kind)},
                             {"n", n},
                             {"seed", seed},
                             {"columns", {"x_1", "x_2"}}};
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot open for writing: " + manifest_path.string());
  out << manifest.dump(2) << "\n";
  if (!out.flush()) throw IoError("write failed: " + manifest_path.string());
}

void SyntheticSource::sample_batch(std::size_t n, Rng& rng,
                                   std::vector<double>& out) const {
  std::size_t base = out.size();
  out.resize(base + n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    Rng child = rng.child(i);
    sample_point(kind_, child, std::span<double>(out).subspan(base + i * 2, 2));
  }
}

MatrixSource::MatrixSource(std::vector<double> values, int dim)
    : values_(std::move(values)), dim_(dim) {
  if (dim < 1 || values_.empty() || values_.size() % static_cast<std::size_t>(dim) != 0) {
    throw ContractError("MatrixSource: values are not a whole number of rows");
  }
}

void MatrixSource::sample_batch(std::size_t n, Rng& rng,
                                std::vector<double>& out) const {
  std::size_t d = static_cast<std::size_t>(dim_);
  std::size_t base = out.size();
  out.resize(base + n * d);
  std::size_t n_rows = rows();
  for (std::size_t i = 0; i < n; ++i) {
    Rng child = rng.child(i);
    std::size_t r = child.uniform_index(n_rows);
    for (std::size_t k = 0; k < d; ++k) {
      out[base + i * d + k] = values_[r * d + k];
    }
  }
}

TabularSplits load_tabular(const std::filesystem::path& path, double train_frac,
                           double valid_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0) || !(valid_frac >= 0.0) ||
      !(train_frac + valid_frac < 1.0)) {
    throw ConfigError("tabular split: need train > 0, valid >= 0, train+valid < 1");
  }
  CsvTable table = read_csv(path);
  std::size_t n = table.rows();
  std::size_t d = table.cols;
  if (n < 3) throw ConfigError("tabular split: need at least 3 rows");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t j = rng.uniform_index(i + 1);
    std::swap(order[i], order[j]);
  }

  // Round to nearest so fractions like 0.7 of 400 give 280, not 279.
  auto share = [n](double frac) {
    return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
  };
  std::size_t n_train = share(train_frac);
  std::size_t n_valid = share(valid_frac);
  if (n_train == 0 || n_train + n_valid >= n) {
    throw ConfigError("tabular split: fractions leave an empty split");
  }

  TabularSplits splits;
  splits.dim = static_cast<int>(d);
  splits.mean.assign(d, 0.0);
  splits.stddev.assign(d, 0.0);

  auto emit = [&](std::vector<double>& dst, std::size_t begin, std::size_t end) {
    dst.reserve((end - begin) * d);
    for (std::size_t i = begin; i < end; ++i) {
      std::size_t r = order[i];
      for (std::size_t c = 0; c < d; ++c) dst.push_back(table.values[r * d + c]);
    }
  };
  emit(splits.train, 0, n_train);
  emit(splits.valid, n_train, n_train + n_valid);
  emit(splits.test, n_train + n_valid, n);

  // Standardization is fit on the training split only (population moments).
  for (std::size_t c = 0; c < d; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n_train; ++r) sum += splits.train[r * d + c];
    splits.mean[c] = sum / static_cast<double>(n_train);
    double ss = 0.0;
    for (std::size_t r = 0; r < n_train; ++r) {
      double dv = splits.train[r * d + c] - splits.mean[c];
      ss += dv * dv;
    }
    double var = ss / static_cast<double>(n_train);
    if (!(var > 0.0)) {
      throw ConfigError("tabular split: column " + std::to_string(c + 1) +
                        " has zero variance on the training split");
    }
    splits.stddev[c] = std::sqrt(var);
    splits.rescale_log_det += std::log(splits.stddev[c]);
  }
  for (auto* part : {&splits.train, &splits.valid, &splits.test}) {
    for (std::size_t i = 0; i < part->size(); ++i) {
      std::size_t c = i % d;
      (*part)[i] = ((*part)[i] - splits.mean[c]) / splits.stddev[c];
    }
  }
  return splits;
}

}  // namespace dflow::data
