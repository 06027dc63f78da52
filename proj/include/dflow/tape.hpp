#pragma once

#include <cstddef>
#include <vector>

namespace dflow::check {

// Minimal scalar reverse-mode autodiff tape. Verification-only: gradcheck
// and the test suite unroll whole trajectory objectives through it to get a
// reference gradient along a code path that shares nothing with the adjoint
// sweep. Not used by training or evaluation.
class Tape {
 public:
  using Id = int;

  Id input(double v) { return push(v); }
  Id constant(double v) { return push(v); }

  Id add(Id a, Id b) { return push(val(a) + val(b), a, 1.0, b, 1.0); }
  Id sub(Id a, Id b) { return push(val(a) - val(b), a, 1.0, b, -1.0); }
  Id mul(Id a, Id b) { return push(val(a) * val(b), a, val(b), b, val(a)); }
  Id add_const(Id a, double c) { return push(val(a) + c, a, 1.0); }
  Id mul_const(Id a, double c) { return push(val(a) * c, a, c); }
  Id sin(Id a);
  Id cos(Id a);
  Id sigmoid(Id a);

  double val(Id i) const { return nodes_[static_cast<std::size_t>(i)].val; }
  std::size_t size() const { return nodes_.size(); }

  // d output / d node for every node, by one reverse sweep.
  std::vector<double> gradient(Id output) const;

 private:
  struct Node {
    double val;
    double pa, pb;  // local partials
    Id a, b;        // parent ids, -1 when absent
  };

  Id push(double v, Id a = -1, double pa = 0.0, Id b = -1, double pb = 0.0) {
    nodes_.push_back(Node{v, pa, pb, a, b});
    return static_cast<Id>(nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

}  // namespace dflow::check
