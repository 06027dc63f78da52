#include <doctest.h>

#include <cmath>
#include <vector>

#include "dflow/rng.hpp"

using dflow::Rng;

TEST_CASE("same seed reproduces the exact stream") {
  Rng a(1234), b(1234);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
  }
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) {
    if (a.next_u64() == b.next_u64()) ++equal;
  }
  CHECK(equal == 0);
}

TEST_CASE("uniform stays in [0,1) and hits both halves") {
  Rng rng(7);
  int low = 0;
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    if (u < 0.5) ++low;
  }
  CHECK(low > 4600);
  CHECK(low < 5400);
}

TEST_CASE("normal moments match a standard gaussian") {
  Rng rng(42);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0, sum_cube = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sum += z;
    sum_sq += z * z;
    sum_cube += z * z * z;
  }
  double mean = sum / n;
  double var = sum_sq / n - mean * mean;
  double skew = sum_cube / n;
  // 5 sigma bands for the MC estimates
  CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(skew) < 5.0 * std::sqrt(15.0 / n));
}

TEST_CASE("child streams do not depend on parent consumption") {
  Rng a(99);
  Rng b(99);
  (void)b.normal();
  (void)b.normal();
  (void)b.uniform();
  Rng ca = a.child(5);
  Rng cb = b.child(5);
  for (int i = 0; i < 100; ++i) CHECK(ca.next_u64() == cb.next_u64());
}

TEST_CASE("sibling children are distinct streams") {
  Rng root(3);
  Rng c0 = root.child(0);
  Rng c1 = root.child(1);
  int equal = 0;
  for (int i = 0; i < 100; ++i) {
    if (c0.next_u64() == c1.next_u64()) ++equal;
  }
  CHECK(equal == 0);
}

TEST_CASE("uniform_index covers the range without bias") {
  Rng rng(11);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) counts[rng.uniform_index(7)]++;
  for (int c : counts) {
    CHECK(c > 10000 - 500);
    CHECK(c < 10000 + 500);
  }
}
