#include "malady/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "malady/active.hpp"
#include "malady/dynamics.hpp"
#include "malady/errors.hpp"

namespace malady {

SparseGraph graph_from_dense(const DenseMatrix& weights) {
  const std::size_t n = weights.rows;
  if (weights.cols != n) throw invalid_parameter_error("weight matrix must be square");
  SparseGraph g;
  g.n = n;
  g.row_offsets.assign(n + 1, 0);
  g.degrees.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = weights.at(i, j);
      if (i == j) {
        if (w != 0.0) throw invalid_parameter_error("graph requires a zero diagonal");
        continue;
      }
      if (w < 0.0 || !std::isfinite(w)) {
        throw invalid_parameter_error("weights must be finite and nonnegative");
      }
      if (w != weights.at(j, i)) {
        throw invalid_parameter_error("weight matrix must be symmetric");
      }
      if (w == 0.0) continue;
      g.cols.push_back(static_cast<std::uint32_t>(j));
      g.weights.push_back(w);
      degree += w;
    }
    g.degrees[i] = degree;
    g.row_offsets[i + 1] = g.cols.size();
  }
  return g;
}

DenseMatrix dense_from_graph(const SparseGraph& graph) {
  DenseMatrix w(graph.n, graph.n, 0.0);
  for (std::size_t i = 0; i < graph.n; ++i) {
    for (std::size_t e = graph.row_begin(i); e < graph.row_end(i); ++e) {
      w.at(i, graph.cols[e]) = graph.weights[e];
    }
  }
  return w;
}

SmallInstance random_exact_instance(Rng& rng, int n, int n_classes) {
  SmallInstance inst;
  inst.a.n_rows = n;
  inst.a.n_classes = n_classes;
  inst.a.values.resize(static_cast<std::size_t>(n) * n_classes);
  for (double& v : inst.a.values) v = rng.next_double();
  if (n < n_classes) throw invalid_parameter_error("need n >= n_classes");
  // Exact volumes summing to n, each class nonempty.
  std::vector<int> volumes(n_classes, 1);
  for (int left = n - n_classes; left > 0; --left) {
    ++volumes[rng.next_below(static_cast<std::uint64_t>(n_classes))];
  }
  inst.bounds = Bounds::exact(volumes);
  return inst;
}

SmallInstance random_bounded_instance(Rng& rng, int n, int n_classes) {
  SmallInstance inst;
  inst.a.n_rows = n;
  inst.a.n_classes = n_classes;
  inst.a.values.resize(static_cast<std::size_t>(n) * n_classes);
  for (double& v : inst.a.values) v = rng.next_double();
  inst.bounds.lower.assign(n_classes, 0);
  inst.bounds.upper.assign(n_classes, 0);
  while (true) {
    long long sum_lower = 0, sum_upper = 0;
    for (int i = 0; i < n_classes; ++i) {
      // Lower bounds include zeros; occasionally push them tight.
      inst.bounds.lower[i] = static_cast<int>(rng.next_below(n / 2 + 1));
      inst.bounds.upper[i] =
          inst.bounds.lower[i] + 1 +
          static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
      sum_lower += inst.bounds.lower[i];
      sum_upper += inst.bounds.upper[i];
    }
    if (sum_lower <= n && sum_upper >= n) break;
  }
  if (rng.next_below(4) == 0) {
    // Tight case: lower bounds sum exactly to n.
    int left = n;
    for (int i = 0; i < n_classes; ++i) {
      const int take = i + 1 == n_classes
                           ? left
                           : static_cast<int>(rng.next_below(
                                 static_cast<std::uint64_t>(left) + 1));
      inst.bounds.lower[i] = take;
      inst.bounds.upper[i] = std::max(inst.bounds.upper[i], take + 1);
      left -= take;
    }
  }
  return inst;
}

namespace {

bool duals_consistent(const AuctionResult& res) {
  for (std::size_t i = 0; i < res.price.size(); ++i) {
    if (res.price[i] * res.incentive[i] != 0.0) return false;
    if (res.price[i] - res.incentive[i] != res.net[i]) return false;
    if (res.price[i] < 0.0 || res.incentive[i] < 0.0) return false;
  }
  return true;
}

}  // namespace

CheckResult check_membership_near_optimality(std::uint64_t seed, int n_instances) {
  Rng rng(seed);
  const double eps = 1e-6;
  int violations = 0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < n_instances; ++trial) {
    const int n = 4 + static_cast<int>(rng.next_below(6));      // 4..9
    const int K = 2 + static_cast<int>(rng.next_below(2));      // 2..3
    const SmallInstance inst = random_exact_instance(rng, n, K);
    const BruteForceResult opt = brute_force_assignment(inst);
    const AuctionResult res =
        membership_auction(eps, inst.bounds.lower, inst.a, std::vector<double>(K, 0.0));
    const double got = total_benefit(inst.a, res.partition);
    const double gap = opt.optimal_value - got;
    worst_gap = std::max(worst_gap, gap);
    if (gap > n * eps) ++violations;
    const auto counts = res.partition.counts();
    for (int i = 0; i < K; ++i) {
      if (counts[i] != inst.bounds.lower[i]) ++violations;
    }
    if (!duals_consistent(res)) ++violations;
  }
  std::ostringstream detail;
  detail << n_instances << " instances, worst optimality gap " << worst_gap;
  return {"membership auction within n*eps of brute force", violations == 0,
          detail.str()};
}

CheckResult check_two_stage_feasibility(std::uint64_t seed, int n_instances) {
  Rng rng(seed);
  const double eps = 1e-6;
  int violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < n_instances; ++trial) {
    const int n = 4 + static_cast<int>(rng.next_below(6));
    const int K = 2 + static_cast<int>(rng.next_below(2));
    const SmallInstance inst = random_bounded_instance(rng, n, K);
    const std::vector<double> zeros(K, 0.0);
    const AuctionResult uba = upper_bound_auction(eps, inst.bounds, inst.a, zeros, zeros);
    const AuctionResult lba = lower_bound_auction(eps, inst.bounds, inst.a, uba.price,
                                                  uba.incentive, uba.partition);
    const auto counts = lba.partition.counts();
    for (int i = 0; i < K; ++i) {
      if (counts[i] < inst.bounds.lower[i] || counts[i] > inst.bounds.upper[i]) {
        ++violations;
      }
    }
    if (!lba.partition.complete()) ++violations;
    const EpsCsResult cs =
        check_eps_cs(lba.partition, inst.a, lba.price, lba.incentive, eps);
    worst = std::max(worst, cs.worst_violation);
    if (!cs.satisfied) ++violations;
    if (!duals_consistent(uba) || !duals_consistent(lba)) ++violations;
  }
  std::ostringstream detail;
  detail << n_instances << " instances, worst eps-CS slack " << worst;
  return {"UBA+LBA feasible and eps-CS", violations == 0, detail.str()};
}

CheckResult check_dual_consistency(std::uint64_t seed, int n_instances) {
  Rng rng(seed);
  int violations = 0;
  int runs = 0;
  for (int trial = 0; trial < n_instances; ++trial) {
    const int n = 4 + static_cast<int>(rng.next_below(6));
    const int K = 2 + static_cast<int>(rng.next_below(2));
    const SmallInstance inst = random_bounded_instance(rng, n, K);
    AuctionSchedule schedule;
    schedule.epsilon0 = 0.05;
    schedule.epsilon_min = 1e-4;
    schedule.alpha = 4.0;
    const AuctionResult res = scaled_auction(inst.a, inst.bounds, schedule, n);
    ++runs;
    if (!duals_consistent(res)) ++violations;
  }
  std::ostringstream detail;
  detail << runs << " scaled auctions, bitwise p.*t = 0 and p - t = d";
  return {"dual consistency", violations == 0, detail.str()};
}

CheckResult check_coefficient_equivalence(std::uint64_t seed, int n_graphs) {
  Rng rng(seed);
  int violations = 0;
  double worst = 0.0;
  for (int trial = 0; trial < n_graphs; ++trial) {
    const int n = 5 + static_cast<int>(rng.next_below(46));  // 5..50
    const int K = 2 + static_cast<int>(rng.next_below(3));   // 2..4
    DenseMatrix w(n, n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng.next_below(3) == 0) continue;  // leave some pairs disconnected
        const double v = rng.next_double();
        w.at(i, j) = v;
        w.at(j, i) = v;
      }
    }
    const SparseGraph graph = graph_from_dense(w);

    Partition part;
    part.n_classes = K;
    part.assignment.resize(n);
    part.bid.assign(n, 0.0);
    for (int x = 0; x < n; ++x) {
      part.assignment[x] = static_cast<int>(rng.next_below(K));
    }

    LabeledData labeled;
    labeled.indices = {0, 1};
    labeled.labels = {0, 1 % K};

    for (int kind = 0; kind < 3; ++kind) {
      ConcaveTermSpec spec;
      if (kind == 0) {
        spec.kind = ConcaveKind::none;
      } else if (kind == 1) {
        spec.kind = ConcaveKind::poisson;
        spec.gamma = 0.5 + rng.next_double();
      } else {
        spec.kind = ConcaveKind::linear;
        spec.linear = DenseMatrix(n, K);
        for (double& v : spec.linear.values) v = rng.next_double() - 0.5;
      }
      const DenseMatrix grad = concave_gradient(spec, labeled, K, n);
      std::vector<int> unlabeled;
      for (int x = 2; x < n; ++x) unlabeled.push_back(x);
      const CoefficientMatrix sparse =
          assignment_coefficients(graph, part, grad, unlabeled);
      const DenseMatrix dense = dense_coefficients(w, part.assignment, grad);
      for (int r = 0; r < sparse.n_rows; ++r) {
        for (int i = 0; i < K; ++i) {
          const double diff =
              std::abs(sparse.at(r, i) - dense.at(unlabeled[r], i));
          worst = std::max(worst, diff);
          if (diff > 1e-12) ++violations;
        }
      }
    }
  }
  std::ostringstream detail;
  detail << n_graphs << " graphs x 3 concave kinds, worst |sparse - dense| = " << worst;
  return {"sparse coefficients match dense oracle", violations == 0, detail.str()};
}

CheckResult check_margin_invariances(std::uint64_t seed, int n_vectors) {
  Rng rng(seed);
  int violations = 0;
  for (int trial = 0; trial < n_vectors; ++trial) {
    const int K = 2 + static_cast<int>(rng.next_below(7));
    std::vector<double> a(K), p(K), t(K);
    for (int i = 0; i < K; ++i) {
      a[i] = 4.0 * rng.next_double() - 2.0;
      p[i] = rng.next_double();
      t[i] = rng.next_double();
    }
    const double eps1 = rng.next_double();
    const double eps2 = 10.0 * rng.next_double();
    const MarginResult m1 = margin(a.data(), p.data(), t.data(), K, eps1);
    const MarginResult m2 = margin(a.data(), p.data(), t.data(), K, eps2);
    if (m1.margin != m2.margin) ++violations;
    if (m1.margin < 0.0) ++violations;
    // argmax of A = 1 - M coincides with argmin of M under the same
    // lowest-index tie-break.
    const int n_pts = 3 + static_cast<int>(rng.next_below(6));
    std::vector<double> margins(n_pts);
    for (double& v : margins) v = rng.next_below(4) == 0 ? 0.25 : rng.next_double();
    int argmax_a = 0, argmin_m = 0;
    for (int i = 1; i < n_pts; ++i) {
      if (1.0 - margins[i] > 1.0 - margins[argmax_a]) argmax_a = i;
      if (margins[i] < margins[argmin_m]) argmin_m = i;
    }
    if (argmax_a != argmin_m) ++violations;
  }
  std::ostringstream detail;
  detail << n_vectors << " random score vectors";
  return {"margin eps-invariance and argmax/argmin equivalence", violations == 0,
          detail.str()};
}

std::vector<CheckResult> run_verification_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CheckResult> results;
  results.push_back(check_membership_near_optimality(rng.fork(), 200));
  results.push_back(check_two_stage_feasibility(rng.fork(), 200));
  results.push_back(check_dual_consistency(rng.fork(), 100));
  results.push_back(check_coefficient_equivalence(rng.fork(), 50));
  results.push_back(check_margin_invariances(rng.fork(), 1000));
  return results;
}

}  // namespace malady
