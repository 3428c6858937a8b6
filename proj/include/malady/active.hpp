#pragma once

#include <cstdint>
#include <vector>

#include "malady/dynamics.hpp"

namespace malady {

struct MarginResult {
  double margin;        // best - second best, computed without the eps offset
  double best_value;    // v(x) = max_i (a_i - p_i + t_i + eps)
  double second_value;  // w(x), the runner-up
};

// Price/incentive margin of one element. The class-uniform +eps shifts the
// reported deal values but cancels out of the margin exactly.
MarginResult margin(const double* a_row, const double* p, const double* t,
                    int n_classes, double eps);

struct AcquisitionScores {
  std::vector<double> scores;   // A(x) = 1 - M(x), aligned with the unlabeled list
  std::vector<double> margins;  // M(x)
  int best_index;               // global point index maximizing A, lowest-index ties
};

// Margins from the SSL run's final coefficients and duals (eps = 0); the
// query argmax of A equals the argmin of M.
AcquisitionScores score_all(const SSLResult& ssl, const std::vector<int>& unlabeled);

// Ground-truth label source standing in for the human annotator.
struct OracleLabels {
  std::vector<int> labels;
  int n_classes = 0;

  int label_of(int x) const { return labels[x]; }
  std::vector<int> true_sizes() const;
};

struct ALBudget {
  int initial_per_class = 5;
  int total = 0;  // final labeled-set size T
};

struct QueryRow {
  int iteration;
  int num_labeled;
  int query_index;  // -1 on the final evaluation row
  double accuracy;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<QueryRow> rows;
  std::vector<int> initial_labeled;
  std::vector<int> queries;
  double final_accuracy = 0.0;
  bool eval_exhausted = false;  // accuracy reported on an empty unlabeled set
  double wall_seconds = 0.0;
};

enum class Acquisition { malady, random };

// Sequential active learning: alternate SSL solves with single-point queries
// until the labeled set reaches the budget, then run SSL once more and score
// it. Accuracy is recorded at every iteration from the SSL run already
// performed for query selection. Bounds are re-derived after every label.
RunRecord malady_loop(const SparseGraph& graph, const OracleLabels& oracle,
                      const ALBudget& budget, const ClassBoundsSpec& bounds_spec,
                      const ConcaveTermSpec& concave_spec,
                      const AuctionSchedule& schedule, int steps, std::uint64_t seed,
                      int diffusion_steps = 0);

// Same pipeline with the query drawn uniformly from the unlabeled set.
RunRecord random_loop(const SparseGraph& graph, const OracleLabels& oracle,
                      const ALBudget& budget, const ClassBoundsSpec& bounds_spec,
                      const ConcaveTermSpec& concave_spec,
                      const AuctionSchedule& schedule, int steps, std::uint64_t seed,
                      int diffusion_steps = 0);

RunRecord active_learning_loop(Acquisition acquisition, const SparseGraph& graph,
                               const OracleLabels& oracle, const ALBudget& budget,
                               const ClassBoundsSpec& bounds_spec,
                               const ConcaveTermSpec& concave_spec,
                               const AuctionSchedule& schedule, int steps,
                               std::uint64_t seed, int diffusion_steps = 0);

}  // namespace malady
