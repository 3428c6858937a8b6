#include "malady/oracle.hpp"

#include <cmath>
#include <limits>

#include "malady/errors.hpp"

namespace malady {

namespace {

constexpr double kEnumerationBudget = 1.2e6;  // admits K=4, n=10

struct Enumerator {
  const CoefficientMatrix& a;
  const Bounds& bounds;
  int n;
  int K;
  std::vector<int> counts;
  std::vector<int> current;
  std::vector<int> best_assignment;
  double best_value = -std::numeric_limits<double>::infinity();
  long long deficit = 0;  // sum over classes of max(0, B_i - count_i)

  void search(int x, double value) {
    if (x == n) {
      // Strict improvement keeps the lexicographically first optimum, since
      // assignments are visited in lexicographic order.
      if (value > best_value) {
        best_value = value;
        best_assignment = current;
      }
      return;
    }
    for (int i = 0; i < K; ++i) {
      if (counts[i] == bounds.upper[i]) continue;
      const long long new_deficit = deficit - (counts[i] < bounds.lower[i] ? 1 : 0);
      if (new_deficit > n - x - 1) continue;  // lower bounds unreachable
      const long long old_deficit = deficit;
      deficit = new_deficit;
      ++counts[i];
      current[x] = i;
      search(x + 1, value + a.at(x, i));
      --counts[i];
      deficit = old_deficit;
    }
  }
};

}  // namespace

BruteForceResult brute_force_assignment(const SmallInstance& inst) {
  const int n = inst.a.n_rows;
  const int K = inst.a.n_classes;
  if (n < 1 || K < 1) throw invalid_parameter_error("empty instance");
  if (inst.bounds.n_classes() != K) {
    throw invalid_parameter_error("bounds class count does not match coefficients");
  }
  if (std::pow(static_cast<double>(K), static_cast<double>(n)) > kEnumerationBudget) {
    throw invalid_parameter_error("instance exceeds the enumeration budget");
  }
  inst.bounds.validate(n);

  Enumerator e{inst.a, inst.bounds, n, K, std::vector<int>(K, 0),
               std::vector<int>(n, -1)};
  for (int i = 0; i < K; ++i) e.deficit += inst.bounds.lower[i];
  e.search(0, 0.0);
  if (e.best_assignment.empty()) {
    throw infeasibility_error("no feasible assignment exists");
  }
  return {e.best_value, e.best_assignment};
}

DenseMatrix dense_coefficients(const DenseMatrix& weights,
                               const std::vector<int>& assignment,
                               const DenseMatrix& grad) {
  const std::size_t n = weights.rows;
  if (weights.cols != n || assignment.size() != n || grad.rows != n) {
    throw invalid_parameter_error("dense_coefficients inputs disagree on shape");
  }
  const std::size_t K = grad.cols;
  DenseMatrix a(n, K);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t i = 0; i < K; ++i) {
      double cross = 0.0;
      for (std::size_t y = 0; y < n; ++y) {
        if (assignment[y] != static_cast<int>(i)) cross += weights.at(x, y);
      }
      a.at(x, i) = 1.0 - grad.at(x, i) - cross;
    }
  }
  return a;
}

}  // namespace malady
