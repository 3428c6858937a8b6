#include <doctest.h>

#include <cmath>
#include <sstream>

#include "malady/dynamics.hpp"
#include "malady/errors.hpp"
#include "malady/oracle.hpp"
#include "malady/rng.hpp"
#include "malady/verify.hpp"

using namespace malady;

namespace {

SparseGraph tiny_graph(std::vector<std::vector<double>> dense) {
  DenseMatrix w(dense.size(), dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    for (std::size_t j = 0; j < dense.size(); ++j) w.at(i, j) = dense[i][j];
  }
  return graph_from_dense(w);
}

}  // namespace

TEST_CASE("derive_unlabeled_bounds per mode") {
  LabeledData lab;
  lab.indices = {0, 1, 2, 3, 4};
  lab.labels = {0, 0, 1, 1, 1};

  ClassBoundsSpec exact{BoundsMode::exact, 0.0, {10, 10}};
  const Bounds be = derive_unlabeled_bounds(exact, lab, 15, 2);
  CHECK(be.lower == std::vector<int>{8, 7});
  CHECK(be.upper == std::vector<int>{8, 7});

  ClassBoundsSpec none;
  const Bounds bn = derive_unlabeled_bounds(none, LabeledData{}, 100, 4);
  CHECK(bn.lower == std::vector<int>{0, 0, 0, 0});
  CHECK(bn.upper == std::vector<int>{100, 100, 100, 100});

  LabeledData empty;
  ClassBoundsSpec flex{BoundsMode::flexible, 0.1, {50, 50}};
  const Bounds bf = derive_unlabeled_bounds(flex, empty, 100, 2);
  CHECK(bf.lower == std::vector<int>{45, 45});
  CHECK(bf.upper == std::vector<int>{55, 55});
}

TEST_CASE("derive_unlabeled_bounds rejects infeasible configurations") {
  LabeledData lab;
  lab.indices = {0};
  lab.labels = {0};
  ClassBoundsSpec exact{BoundsMode::exact, 0.0, {2, 2}};
  // 3 unlabeled cannot fill B = U = [1, 2]... make it genuinely infeasible
  CHECK_THROWS_AS(derive_unlabeled_bounds(exact, lab, 5, 2), infeasibility_error);
  ClassBoundsSpec bad{BoundsMode::exact, 0.0, {0, 2}};
  CHECK_THROWS_AS(derive_unlabeled_bounds(bad, lab, 1, 2), invalid_parameter_error);
}

TEST_CASE("initial partition respects labels and exact counts") {
  const auto g = tiny_graph({{0, 1, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}, {0, 0, 1, 0}});
  LabeledData lab;
  lab.indices = {0};
  lab.labels = {1};
  Bounds bounds = Bounds::exact({2, 1});
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    const Partition part = initial_partition(g, lab, bounds, seed);
    CHECK(part.assignment[0] == 1);
    int c0 = 0, c1 = 0;
    for (int x = 1; x < 4; ++x) (part.assignment[x] == 0 ? c0 : c1)++;
    CHECK(c0 == 2);
    CHECK(c1 == 1);
  }
}

TEST_CASE("all points labeled gives back the labels") {
  const auto g = tiny_graph({{0, 1}, {1, 0}});
  LabeledData lab;
  lab.indices = {0, 1};
  lab.labels = {1, 0};
  const Partition part = initial_partition(g, lab, Bounds::exact({0, 0}), 7);
  CHECK(part.assignment == std::vector<int>{1, 0});
}

TEST_CASE("concave gradients per kind") {
  LabeledData lab;
  lab.indices = {0, 2};
  lab.labels = {0, 1};

  ConcaveTermSpec none;
  const DenseMatrix gz = concave_gradient(none, lab, 2, 4);
  for (double v : gz.values) CHECK(v == 0.0);

  ConcaveTermSpec poisson{ConcaveKind::poisson, 1.0, {}};
  const DenseMatrix gp = concave_gradient(poisson, lab, 2, 4);
  CHECK(gp.at(0, 0) == doctest::Approx(-0.5));
  CHECK(gp.at(0, 1) == doctest::Approx(0.5));
  CHECK(gp.at(2, 0) == doctest::Approx(0.5));
  CHECK(gp.at(2, 1) == doctest::Approx(-0.5));
  CHECK(gp.at(1, 0) == 0.0);
  CHECK(gp.at(3, 1) == 0.0);

  ConcaveTermSpec linear;
  linear.kind = ConcaveKind::linear;
  linear.linear = DenseMatrix(4, 2, 0.25);
  const DenseMatrix gl = concave_gradient(linear, lab, 2, 4);
  CHECK(gl.values == linear.linear.values);
}

TEST_CASE("assignment coefficients on a two-neighbour point") {
  // x = 0 with neighbours 1 (w = .5, class 0) and 2 (w = .3, class 1)
  const auto g = tiny_graph({{0, 0.5, 0.3}, {0.5, 0, 0}, {0.3, 0, 0}});
  Partition part;
  part.n_classes = 2;
  part.assignment = {0, 0, 1};
  part.bid = {0, 0, 0};
  const DenseMatrix grad(3, 2, 0.0);
  const auto a = assignment_coefficients(g, part, grad, {0});
  CHECK(a.at(0, 0) == doctest::Approx(0.7));
  CHECK(a.at(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("isolated points have unit coefficients") {
  const auto g = tiny_graph({{0, 0, 0}, {0, 0, 1}, {0, 1, 0}});
  Partition part;
  part.n_classes = 2;
  part.assignment = {0, 1, 1};
  part.bid = {0, 0, 0};
  const DenseMatrix grad(3, 2, 0.0);
  const auto a = assignment_coefficients(g, part, grad, {0});
  CHECK(a.at(0, 0) == 1.0);
  CHECK(a.at(0, 1) == 1.0);
}

TEST_CASE("coefficient identity against dense complement sums") {
  Rng rng(67);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6 + static_cast<int>(rng.next_below(20));
    const int K = 2 + static_cast<int>(rng.next_below(3));
    DenseMatrix w(n, n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng.next_below(2) == 0) continue;
        const double v = rng.next_double();
        w.at(i, j) = v;
        w.at(j, i) = v;
      }
    }
    const SparseGraph g = graph_from_dense(w);
    Partition part;
    part.n_classes = K;
    part.bid.assign(n, 0.0);
    for (int x = 0; x < n; ++x) {
      part.assignment.push_back(static_cast<int>(rng.next_below(K)));
    }
    DenseMatrix grad(n, K);
    for (double& v : grad.values) v = rng.next_double() - 0.5;
    std::vector<int> unl;
    for (int x = 0; x < n; ++x) unl.push_back(x);
    const auto a = assignment_coefficients(g, part, grad, unl);
    for (int x = 0; x < n; ++x) {
      for (int i = 0; i < K; ++i) {
        double complement = 0.0;
        for (int y = 0; y < n; ++y) {
          if (part.assignment[y] != i) complement += w.at(x, y);
        }
        CHECK(a.at(x, i) + complement + grad.at(x, i) ==
              doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("ghc energy cases") {
  const auto g = tiny_graph({{0, 0.4}, {0.4, 0}});
  Partition same;
  same.n_classes = 2;
  same.assignment = {0, 0};
  same.bid = {0, 0};
  CHECK(ghc_energy(g, same) == 0.0);
  Partition split = same;
  split.assignment = {0, 1};
  CHECK(ghc_energy(g, split) == doctest::Approx(0.8));

  const auto tri = tiny_graph({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  Partition tpart;
  tpart.n_classes = 2;
  tpart.assignment = {0, 1, 1};
  tpart.bid = {0, 0, 0};
  CHECK(ghc_energy(tri, tpart) == doctest::Approx(4.0));
}

TEST_CASE("ssl with zero steps returns the initial state") {
  const auto g = tiny_graph({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
  LabeledData lab;
  lab.indices = {0};
  lab.labels = {0};
  ClassBoundsSpec bounds;
  ConcaveTermSpec concave;
  AuctionSchedule sched;
  const SSLResult ssl = ssl_classify(g, lab, bounds, concave, sched, 0, 2, 5);
  CHECK(ssl.steps_run == 0);
  CHECK(ssl.energy_trace.empty());
  CHECK(ssl.price == std::vector<double>{0, 0});
  CHECK(ssl.incentive == std::vector<double>{0, 0});
  CHECK(ssl.partition.assignment[0] == 0);
  CHECK(ssl.partition.complete());
}

TEST_CASE("unlabeled points surrounded by one labeled class adopt it") {
  // Star around each unlabeled point: all neighbours labeled class 1.
  const auto g = tiny_graph({{0, 0, 0.9, 0.9},
                             {0, 0, 0.8, 0.7},
                             {0.9, 0.8, 0, 0},
                             {0.9, 0.7, 0, 0}});
  LabeledData lab;
  lab.indices = {2, 3};
  lab.labels = {1, 1};
  ClassBoundsSpec bounds;  // none
  ConcaveTermSpec concave;
  AuctionSchedule sched;
  const SSLResult ssl = ssl_classify(g, lab, bounds, concave, sched, 1, 2, 5);
  CHECK(ssl.partition.assignment[0] == 1);
  CHECK(ssl.partition.assignment[1] == 1);
}

TEST_CASE("labels never move and bounds hold at every step") {
  Rng rng(71);
  DenseMatrix w(12, 12, 0.0);
  for (int i = 0; i < 12; ++i) {
    for (int j = i + 1; j < 12; ++j) {
      const double v = rng.next_double();
      w.at(i, j) = v;
      w.at(j, i) = v;
    }
  }
  const SparseGraph g = graph_from_dense(w);
  LabeledData lab;
  lab.indices = {0, 5};
  lab.labels = {0, 1};
  ClassBoundsSpec bounds{BoundsMode::exact, 0.0, {6, 6}};
  ConcaveTermSpec concave;
  AuctionSchedule sched;
  const SSLResult ssl = ssl_classify(g, lab, bounds, concave, sched, 8, 2, 3);
  CHECK(ssl.partition.assignment[0] == 0);
  CHECK(ssl.partition.assignment[5] == 1);
  const auto counts = ssl.partition.counts();
  CHECK(counts[0] == 6);
  CHECK(counts[1] == 6);
}

TEST_CASE("ssl runs are deterministic given the seed") {
  Rng rng(73);
  DenseMatrix w(15, 15, 0.0);
  for (int i = 0; i < 15; ++i) {
    for (int j = i + 1; j < 15; ++j) {
      if (rng.next_below(2) == 0) continue;
      const double v = rng.next_double();
      w.at(i, j) = v;
      w.at(j, i) = v;
    }
  }
  const SparseGraph g = graph_from_dense(w);
  LabeledData lab;
  lab.indices = {1, 2};
  lab.labels = {0, 1};
  ClassBoundsSpec bounds{BoundsMode::flexible, 0.25, {8, 7}};
  ConcaveTermSpec concave{ConcaveKind::poisson, 0.7, {}};
  AuctionSchedule sched;
  const SSLResult a = ssl_classify(g, lab, bounds, concave, sched, 10, 2, 99, 2);
  const SSLResult b = ssl_classify(g, lab, bounds, concave, sched, 10, 2, 99, 2);
  CHECK(a.partition.assignment == b.partition.assignment);
  CHECK(a.price == b.price);
  CHECK(a.incentive == b.incentive);
  CHECK(a.energy_trace == b.energy_trace);
  CHECK(a.final_coefficients.values == b.final_coefficients.values);
}

TEST_CASE("verbose mode emits one JSON line per step") {
  const auto g = tiny_graph({{0, 1, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}, {0, 0, 1, 0}});
  LabeledData lab;
  lab.indices = {0};
  lab.labels = {0};
  ClassBoundsSpec bounds;
  ConcaveTermSpec concave;
  AuctionSchedule sched;
  std::ostringstream out;
  const SSLResult ssl =
      ssl_classify(g, lab, bounds, concave, sched, 5, 2, 5, 0, nullptr, &out);
  int lines = 0;
  std::string line;
  std::istringstream in(out.str());
  while (std::getline(in, line)) {
    ++lines;
    CHECK(line.find("\"energy\":") != std::string::npos);
    CHECK(line.find("\"rounds_of_epsilon\":") != std::string::npos);
  }
  CHECK(lines == ssl.steps_run);
}

TEST_CASE("fully labeled datasets pass through unchanged") {
  const auto g = tiny_graph({{0, 1}, {1, 0}});
  LabeledData lab;
  lab.indices = {0, 1};
  lab.labels = {1, 0};
  ClassBoundsSpec bounds;
  ConcaveTermSpec concave;
  AuctionSchedule sched;
  const SSLResult ssl = ssl_classify(g, lab, bounds, concave, sched, 10, 2, 1);
  CHECK(ssl.partition.assignment == std::vector<int>{1, 0});
  CHECK(ssl.steps_run == 0);
}
