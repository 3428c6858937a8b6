#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "malady/errors.hpp"
#include "malady/graph.hpp"
#include "malady/rng.hpp"

using namespace malady;

namespace {

FeatureMatrix line_points() {
  FeatureMatrix f(3, 1);
  f.at(0, 0) = 0.0;
  f.at(1, 0) = 1.0;
  f.at(2, 0) = 3.0;
  return f;
}

FeatureMatrix random_points(Rng& rng, std::size_t n, std::size_t d) {
  FeatureMatrix f(n, d);
  for (double& v : f.values) v = rng.next_double();
  return f;
}

// Brute-force all pairwise distances, fully independent of knn_search.
double pair_distance(const FeatureMatrix& f, std::size_t i, std::size_t j) {
  double s = 0;
  for (std::size_t k = 0; k < f.cols; ++k) {
    const double diff = f.at(i, k) - f.at(j, k);
    s += diff * diff;
  }
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("knn on a 3-point line") {
  const auto knn = knn_search(line_points(), 1, Metric::euclidean);
  CHECK(knn[0][0].index == 1);
  CHECK(knn[1][0].index == 0);
  CHECK(knn[2][0].index == 1);
}

TEST_CASE("k=1 neighbour distance equals the pairwise minimum") {
  Rng rng(17);
  const FeatureMatrix f = random_points(rng, 30, 3);
  const auto knn = knn_search(f, 1, Metric::euclidean);
  for (std::size_t i = 0; i < f.rows; ++i) {
    double best = 1e300;
    for (std::size_t j = 0; j < f.rows; ++j) {
      if (j != i) best = std::min(best, pair_distance(f, i, j));
    }
    CHECK(knn[i][0].distance == doctest::Approx(best).epsilon(1e-14));
  }
}

TEST_CASE("duplicated points list each other at distance zero") {
  FeatureMatrix f(3, 2);
  f.at(0, 0) = 0.5;
  f.at(0, 1) = 0.5;
  f.at(1, 0) = 0.5;
  f.at(1, 1) = 0.5;
  f.at(2, 0) = 9.0;
  f.at(2, 1) = 9.0;
  const auto knn = knn_search(f, 1, Metric::euclidean);
  CHECK(knn[0][0].index == 1);
  CHECK(knn[0][0].distance == 0.0);
  CHECK(knn[1][0].index == 0);
  CHECK(knn[1][0].distance == 0.0);
}

TEST_CASE("knn rejects k >= N") {
  CHECK_THROWS_AS(knn_search(line_points(), 3, Metric::euclidean),
                  invalid_parameter_error);
}

TEST_CASE("gaussian weight values") {
  CHECK(gaussian_weight(0.0, 1.0) == 1.0);
  CHECK(gaussian_weight(1.0, 1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(gaussian_weight(2.0, 1.0) == doctest::Approx(std::exp(-4.0)));
  CHECK_THROWS_AS(gaussian_weight(1.0, 0.0), invalid_parameter_error);
  CHECK_THROWS_AS(gaussian_weight(1.0, -2.0), invalid_parameter_error);
}

TEST_CASE("cosine weight: identical, orthogonal, scale invariant") {
  const std::vector<double> a{1.0, 0.0}, b{0.0, 2.0}, a5{5.0, 0.0}, c{0.3, 0.7};
  CHECK(cosine_local_weight(a, a, 0.7, 0.9) == doctest::Approx(1.0));
  const double pi_half = std::acos(0.0);
  CHECK(cosine_local_weight(a, b, 0.7, 0.9) ==
        doctest::Approx(std::exp(-pi_half * pi_half / (0.7 * 0.9))));
  CHECK(cosine_local_weight(a, c, 0.7, 0.9) ==
        doctest::Approx(cosine_local_weight(a5, c, 0.7, 0.9)));
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(cosine_local_weight(zero, a, 0.7, 0.9), invalid_parameter_error);
}

TEST_CASE("cosine weight clamps zero sigma to the floor") {
  const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0};
  const double w = cosine_local_weight(a, b, 0.0, 0.0);
  CHECK(w >= 0.0);
  CHECK(std::isfinite(w));
}

TEST_CASE("build_graph on the 3-point line, global sigma") {
  KernelSpec spec;
  spec.kind = KernelKind::gaussian;
  spec.k_neighbors = 2;
  spec.scale_mode = ScaleMode::global;
  spec.sigma = 1.0;
  const SparseGraph g = build_graph(line_points(), spec);
  std::map<std::pair<int, int>, double> w;
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t e = g.row_begin(i); e < g.row_end(i); ++e) {
      w[{static_cast<int>(i), static_cast<int>(g.cols[e])}] = g.weights[e];
    }
  }
  CHECK(w.size() == 6);
  CHECK(w[{0, 1}] == doctest::Approx(std::exp(-1.0)));
  CHECK(w[{1, 2}] == doctest::Approx(std::exp(-4.0)));
  CHECK(w[{0, 2}] == doctest::Approx(std::exp(-9.0)));
}

TEST_CASE("one-sided kNN edges get half weight after symmetrization") {
  // 0 -> 1 is one-sided (1's nearest is 2); 1 <-> 2 is mutual.
  FeatureMatrix f(3, 1);
  f.at(0, 0) = 0.0;
  f.at(1, 0) = 1.0;
  f.at(2, 0) = 1.9;
  KernelSpec spec;
  spec.k_neighbors = 1;
  spec.scale_mode = ScaleMode::global;
  spec.sigma = 1.0;
  const SparseGraph g = build_graph(f, spec);
  std::map<std::pair<int, int>, double> w;
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t e = g.row_begin(i); e < g.row_end(i); ++e) {
      w[{static_cast<int>(i), static_cast<int>(g.cols[e])}] = g.weights[e];
    }
  }
  CHECK(w[{0, 1}] == doctest::Approx(0.5 * std::exp(-1.0)));
  CHECK(w[{1, 0}] == w[{0, 1}]);
  CHECK(w[{1, 2}] == doctest::Approx(std::exp(-0.81)));
  CHECK(w[{2, 1}] == w[{1, 2}]);
  CHECK(w.count({0, 2}) == 0);
}

TEST_CASE("graph invariants on random data") {
  Rng rng(29);
  const FeatureMatrix f = random_points(rng, 60, 4);
  KernelSpec spec;
  spec.k_neighbors = 5;
  const SparseGraph g = build_graph(f, spec);

  std::map<std::pair<int, int>, double> w;
  for (std::size_t i = 0; i < g.n; ++i) {
    CHECK(g.row_end(i) - g.row_begin(i) <= 2 * spec.k_neighbors);
    double degree = 0.0;
    for (std::size_t e = g.row_begin(i); e < g.row_end(i); ++e) {
      CHECK(g.cols[e] != i);  // zero diagonal
      CHECK(g.weights[e] > 0.0);
      CHECK(g.weights[e] <= 1.0);
      degree += g.weights[e];
      w[{static_cast<int>(i), static_cast<int>(g.cols[e])}] = g.weights[e];
    }
    CHECK(g.degree(i) == degree);
    CHECK(degree > 0.0);
  }
  for (const auto& [key, weight] : w) {
    auto mirror = w.find({key.second, key.first});
    REQUIRE(mirror != w.end());
    CHECK(mirror->second == weight);  // bit-identical
  }
}

TEST_CASE("row permutation produces a permutation-equivalent graph") {
  Rng rng(31);
  const FeatureMatrix f = random_points(rng, 40, 3);
  std::vector<int> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  FeatureMatrix fp(40, 3);
  for (int i = 0; i < 40; ++i) {
    for (int c = 0; c < 3; ++c) fp.at(perm[i], c) = f.at(i, c);
  }
  KernelSpec spec;
  spec.k_neighbors = 4;
  const SparseGraph g = build_graph(f, spec);
  const SparseGraph gp = build_graph(fp, spec);

  std::map<std::pair<int, int>, double> w, wp;
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t e = g.row_begin(i); e < g.row_end(i); ++e) {
      w[{perm[i], perm[g.cols[e]]}] = g.weights[e];
    }
  }
  for (std::size_t i = 0; i < gp.n; ++i) {
    for (std::size_t e = gp.row_begin(i); e < gp.row_end(i); ++e) {
      wp[{static_cast<int>(i), static_cast<int>(gp.cols[e])}] = gp.weights[e];
    }
  }
  REQUIRE(w.size() == wp.size());
  for (const auto& [key, weight] : w) {
    auto it = wp.find(key);
    REQUIRE(it != wp.end());
    CHECK(it->second == doctest::Approx(weight).epsilon(1e-13));
  }
}

TEST_CASE("angular knn rejects zero vectors") {
  FeatureMatrix f(2, 2);
  f.at(0, 0) = 1.0;
  CHECK_THROWS_AS(knn_search(f, 1, Metric::angular), invalid_parameter_error);
}
