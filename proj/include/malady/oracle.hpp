#pragma once

#include <vector>

#include "malady/auction.hpp"
#include "malady/matrix.hpp"

namespace malady {

// Brute-force references for test use. Everything here is independent of the
// auction and dynamics implementation paths it is used to check.

struct SmallInstance {
  CoefficientMatrix a;
  Bounds bounds;
};

struct BruteForceResult {
  double optimal_value;
  std::vector<int> assignment;  // lexicographically first optimum
};

// Exhaustive enumeration of all class assignments satisfying
// B_i <= count_i <= U_i, maximizing the total benefit. Branches that can no
// longer satisfy the bounds are pruned. Instances beyond ~10^6 raw
// assignments are rejected.
BruteForceResult brute_force_assignment(const SmallInstance& inst);

// a_i(x) = 1 - grad_i(x) - sum_{y: class(y) != i} W(x, y), by direct double
// loop over a dense weight matrix.
DenseMatrix dense_coefficients(const DenseMatrix& weights,
                               const std::vector<int>& assignment,
                               const DenseMatrix& grad);

}  // namespace malady
