#include <doctest.h>

#include <algorithm>

#include "malady/errors.hpp"
#include "malady/oracle.hpp"
#include "malady/rng.hpp"

using namespace malady;

namespace {

SmallInstance make_instance(std::vector<std::vector<double>> rows, Bounds bounds) {
  SmallInstance inst;
  inst.a.n_rows = static_cast<int>(rows.size());
  inst.a.n_classes = static_cast<int>(rows[0].size());
  for (const auto& r : rows) {
    inst.a.values.insert(inst.a.values.end(), r.begin(), r.end());
  }
  inst.bounds = std::move(bounds);
  return inst;
}

}  // namespace

TEST_CASE("diagonal instance with exact volumes") {
  const auto inst = make_instance({{2, 0}, {0, 2}}, Bounds::exact({1, 1}));
  const auto res = brute_force_assignment(inst);
  CHECK(res.optimal_value == 4.0);
  CHECK(res.assignment == std::vector<int>{0, 1});
}

TEST_CASE("unconstrained optimum is the sum of row maxima") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    SmallInstance inst;
    inst.a.n_rows = 6;
    inst.a.n_classes = 3;
    inst.a.values.resize(18);
    for (double& v : inst.a.values) v = rng.next_double();
    inst.bounds = Bounds::unconstrained(3, 6);
    double expect = 0.0;
    for (int x = 0; x < 6; ++x) {
      expect += *std::max_element(inst.a.row(x), inst.a.row(x) + 3);
    }
    CHECK(brute_force_assignment(inst).optimal_value == doctest::Approx(expect));
  }
}

TEST_CASE("constant benefits make every feasible assignment optimal") {
  const auto inst = make_instance({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}},
                                  Bounds::exact({2, 1}));
  const auto res = brute_force_assignment(inst);
  CHECK(res.optimal_value == doctest::Approx(1.5));
  // lexicographically first feasible optimum
  CHECK(res.assignment == std::vector<int>{0, 0, 1});
}

TEST_CASE("enumeration budget is enforced") {
  SmallInstance inst;
  inst.a.n_rows = 12;
  inst.a.n_classes = 4;
  inst.a.values.assign(48, 0.0);
  inst.bounds = Bounds::unconstrained(4, 12);
  CHECK_THROWS_AS(brute_force_assignment(inst), invalid_parameter_error);
}

TEST_CASE("infeasible lower bounds surface as errors") {
  auto inst = make_instance({{1, 0}, {0, 1}}, Bounds{{2, 2}, {2, 2}});
  CHECK_THROWS_AS(brute_force_assignment(inst), infeasibility_error);
}

TEST_CASE("dense coefficients with zero weights reduce to 1 - grad") {
  DenseMatrix w(3, 3, 0.0);
  DenseMatrix grad(3, 2, 0.0);
  grad.at(1, 0) = 0.25;
  const auto a = dense_coefficients(w, {0, 1, 0}, grad);
  CHECK(a.at(0, 0) == 1.0);
  CHECK(a.at(1, 0) == 0.75);
  CHECK(a.at(1, 1) == 1.0);
}

TEST_CASE("dense coefficients on the complete unit-weight graph") {
  const int n = 5;
  DenseMatrix w(n, n, 1.0);
  for (int i = 0; i < n; ++i) w.at(i, i) = 0.0;
  DenseMatrix grad(n, 2, 0.0);
  const std::vector<int> all_zero(n, 0);
  const auto a = dense_coefficients(w, all_zero, grad);
  for (int x = 0; x < n; ++x) {
    CHECK(a.at(x, 0) == doctest::Approx(1.0));
    CHECK(a.at(x, 1) == doctest::Approx(1.0 - (n - 1)));
  }
}
