#include "dflow/tape.hpp"

#include <cmath>

namespace dflow::check {

Tape::Id Tape::sin(Id a) {
  return push(std::sin(val(a)), a, std::cos(val(a)));
}

Tape::Id Tape::cos(Id a) {
  return push(std::cos(val(a)), a, -std::sin(val(a)));
}

Tape::Id Tape::sigmoid(Id a) {
  double s = 1.0 / (1.0 + std::exp(-val(a)));
  return push(s, a, s * (1.0 - s));
}

std::vector<double> Tape::gradient(Id output) const {
  std::vector<double> g(nodes_.size(), 0.0);
  g[static_cast<std::size_t>(output)] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const Node& n = nodes_[i];
    double gi = g[i];
    if (gi == 0.0) continue;
    if (n.a >= 0) g[static_cast<std::size_t>(n.a)] += n.pa * gi;
    if (n.b >= 0) g[static_cast<std::size_t>(n.b)] += n.pb * gi;
  }
  return g;
}

}  // namespace dflow::check
