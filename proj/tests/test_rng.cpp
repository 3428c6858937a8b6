#include <doctest.h>

#include <cmath>
#include <vector>

#include "malady/rng.hpp"

using namespace malady;

TEST_CASE("same seed same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("next_below stays in range") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    CHECK(rng.next_below(13) < 13);
  }
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(3);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  rng.shuffle(v);
  std::vector<char> seen(10, 0);
  for (int x : v) seen[x] = 1;
  for (char s : seen) CHECK(s == 1);
}

TEST_CASE("normals have roughly standard moments") {
  Rng rng(11);
  double sum = 0, sumsq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.next_normal();
    sum += z;
    sumsq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sumsq / n - 1.0) < 0.05);
}
