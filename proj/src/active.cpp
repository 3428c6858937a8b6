#include "malady/active.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "malady/dataset.hpp"
#include "malady/errors.hpp"
#include "malady/rng.hpp"

namespace malady {

MarginResult margin(const double* a_row, const double* p, const double* t,
                    int n_classes, double eps) {
  if (n_classes < 2) throw invalid_parameter_error("margin requires at least two classes");
  int best = 0;
  double best_v = a_row[0] - p[0] + t[0];
  double second_v = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < n_classes; ++i) {
    const double v = a_row[i] - p[i] + t[i];
    if (v > best_v) {
      second_v = best_v;
      best_v = v;
      best = i;
    } else if (v > second_v) {
      second_v = v;
    }
  }
  if (!std::isfinite(best_v) || !std::isfinite(second_v)) {
    throw invalid_parameter_error("margin inputs must be finite");
  }
  (void)best;
  // The margin is formed before adding eps so it is exactly eps-independent.
  return {best_v - second_v, best_v + eps, second_v + eps};
}

AcquisitionScores score_all(const SSLResult& ssl, const std::vector<int>& unlabeled) {
  if (unlabeled.empty()) {
    throw invalid_state_error("no unlabeled points left to score");
  }
  const CoefficientMatrix& a = ssl.final_coefficients;
  if (a.n_rows != static_cast<int>(unlabeled.size()) ||
      a.row_points != unlabeled) {
    throw invalid_state_error("SSL result does not carry final-step coefficients "
                              "for the requested unlabeled set");
  }
  AcquisitionScores out;
  out.scores.resize(unlabeled.size());
  out.margins.resize(unlabeled.size());
  out.best_index = unlabeled.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < a.n_rows; ++r) {
    const MarginResult m =
        margin(a.row(r), ssl.price.data(), ssl.incentive.data(), a.n_classes, 0.0);
    out.margins[r] = m.margin;
    out.scores[r] = 1.0 - m.margin;
    if (out.scores[r] > best_score) {
      best_score = out.scores[r];
      out.best_index = unlabeled[r];
    }
  }
  return out;
}

std::vector<int> OracleLabels::true_sizes() const {
  std::vector<int> sizes(n_classes, 0);
  for (int l : labels) ++sizes[l];
  return sizes;
}

RunRecord active_learning_loop(Acquisition acquisition, const SparseGraph& graph,
                               const OracleLabels& oracle, const ALBudget& budget,
                               const ClassBoundsSpec& bounds_spec,
                               const ConcaveTermSpec& concave_spec,
                               const AuctionSchedule& schedule, int steps,
                               std::uint64_t seed, int diffusion_steps) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = static_cast<int>(graph.n);
  const int K = oracle.n_classes;
  if (K < 2) throw invalid_parameter_error("active learning requires K >= 2");
  if (static_cast<int>(oracle.labels.size()) != n) {
    throw invalid_parameter_error("oracle must label every point");
  }
  if (budget.initial_per_class < 1) {
    throw invalid_parameter_error("initial per-class count must be positive");
  }
  if (budget.total > n) throw invalid_parameter_error("budget exceeds the dataset size");

  Rng rng(seed);

  // Initial labeled set: a seeded uniform draw of initial_per_class points
  // from each class.
  RunRecord record;
  record.seed = seed;
  std::vector<char> is_labeled(n, 0);
  for (int c = 0; c < K; ++c) {
    std::vector<int> pool;
    for (int x = 0; x < n; ++x) {
      if (oracle.labels[x] == c) pool.push_back(x);
    }
    if (static_cast<int>(pool.size()) < budget.initial_per_class) {
      throw invalid_parameter_error("class " + std::to_string(c) +
                                    " has fewer points than initial_per_class");
    }
    for (int j = 0; j < budget.initial_per_class; ++j) {
      const std::size_t pick =
          j + static_cast<std::size_t>(rng.next_below(pool.size() - j));
      std::swap(pool[j], pool[pick]);
    }
    std::sort(pool.begin(), pool.begin() + budget.initial_per_class);
    for (int j = 0; j < budget.initial_per_class; ++j) {
      record.initial_labeled.push_back(pool[j]);
      is_labeled[pool[j]] = 1;
    }
  }
  if (budget.total < static_cast<int>(record.initial_labeled.size())) {
    throw invalid_parameter_error("budget is smaller than the initial labeled set");
  }

  LabeledData labeled;
  labeled.indices = record.initial_labeled;
  for (int x : labeled.indices) labeled.labels.push_back(oracle.labels[x]);

  int iteration = 0;
  while (true) {
    SSLResult ssl = ssl_classify(graph, labeled, bounds_spec, concave_spec, schedule,
                                 steps, K, rng.fork(), diffusion_steps);
    std::vector<int> unlabeled;
    unlabeled.reserve(n - labeled.size());
    for (int x = 0; x < n; ++x) {
      if (!is_labeled[x]) unlabeled.push_back(x);
    }
    bool exhausted = false;
    const double acc =
        accuracy(ssl.partition.assignment, oracle.labels, unlabeled, &exhausted);
    record.eval_exhausted |= exhausted;

    if (labeled.size() < budget.total) {
      int query;
      if (acquisition == Acquisition::malady) {
        query = score_all(ssl, unlabeled).best_index;
      } else {
        query = unlabeled[rng.next_below(unlabeled.size())];
      }
      record.rows.push_back({iteration, labeled.size(), query, acc});
      record.queries.push_back(query);
      labeled.indices.push_back(query);
      labeled.labels.push_back(oracle.labels[query]);
      is_labeled[query] = 1;
      ++iteration;
    } else {
      record.rows.push_back({iteration, labeled.size(), -1, acc});
      record.final_accuracy = acc;
      break;
    }
  }
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return record;
}

RunRecord malady_loop(const SparseGraph& graph, const OracleLabels& oracle,
                      const ALBudget& budget, const ClassBoundsSpec& bounds_spec,
                      const ConcaveTermSpec& concave_spec,
                      const AuctionSchedule& schedule, int steps, std::uint64_t seed,
                      int diffusion_steps) {
  return active_learning_loop(Acquisition::malady, graph, oracle, budget, bounds_spec,
                              concave_spec, schedule, steps, seed, diffusion_steps);
}

RunRecord random_loop(const SparseGraph& graph, const OracleLabels& oracle,
                      const ALBudget& budget, const ClassBoundsSpec& bounds_spec,
                      const ConcaveTermSpec& concave_spec,
                      const AuctionSchedule& schedule, int steps, std::uint64_t seed,
                      int diffusion_steps) {
  return active_learning_loop(Acquisition::random, graph, oracle, budget, bounds_spec,
                              concave_spec, schedule, steps, seed, diffusion_steps);
}

}  // namespace malady
