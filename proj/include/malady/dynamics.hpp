#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "malady/auction.hpp"
#include "malady/graph.hpp"
#include "malady/matrix.hpp"

namespace malady {

struct LabeledData {
  std::vector<int> indices;  // distinct point indices
  std::vector<int> labels;   // class of each labeled point, in [0, K)

  int size() const { return static_cast<int>(indices.size()); }
  std::vector<int> class_counts(int n_classes) const;
  void validate(std::size_t n_points, int n_classes) const;
};

enum class BoundsMode { exact, flexible, none };

struct ClassBoundsSpec {
  BoundsMode mode = BoundsMode::none;
  double slack = 0.0;           // flexible mode, in [0, 1]
  std::vector<int> true_sizes;  // required for exact/flexible
};

enum class ConcaveKind { none, poisson, linear };

struct ConcaveTermSpec {
  ConcaveKind kind = ConcaveKind::none;
  double gamma = 1.0;   // poisson
  DenseMatrix linear;   // N x K gradient matrix for the linear hook
};

struct SSLResult {
  Partition partition;                 // over all N points, labeled rows fixed
  std::vector<double> price;           // final duals of the last scheme step
  std::vector<double> incentive;
  CoefficientMatrix final_coefficients;  // last step's assignment coefficients
  std::vector<double> energy_trace;    // GHC + J_conc after each completed step
  int steps_run = 0;
};

// Bounds on the unlabeled side of each class, per the mode:
//   exact      B_i = U_i = true_i - labeled_i
//   flexible   B_i = floor((1-s) base_i), U_i = ceil((1+s) base_i), clamped
//   none       B_i = 0, U_i = n_unlabeled
Bounds derive_unlabeled_bounds(const ClassBoundsSpec& spec, const LabeledData& labeled,
                               int n_unlabeled, int n_classes);

// Labeled points at their labels; unlabeled points seeded-uniform subject to
// the bounds (lower bounds filled first, remainder spread over classes with
// open capacity).
Partition initial_partition(const SparseGraph& graph, const LabeledData& labeled,
                            const Bounds& bounds, std::uint64_t seed);

// Gradient of the concave term, N x K. Poisson rows are -gamma (e_{l_j} - lbar)
// on labeled points and zero elsewhere.
DenseMatrix concave_gradient(const ConcaveTermSpec& spec, const LabeledData& labeled,
                             int n_classes, std::size_t n_points);

// a_i(x) = 1 - grad_i(x) - (degree(x) - sum_{y in class i} w(x,y)) for each
// unlabeled x, via one sparse-row scan per point.
CoefficientMatrix assignment_coefficients(const SparseGraph& graph,
                                          const Partition& partition,
                                          const DenseMatrix& grad,
                                          const std::vector<int>& unlabeled);

// Graph heat content of a crisp partition: the total weight of ordered pairs
// crossing class boundaries (twice the weighted cut).
double ghc_energy(const SparseGraph& graph, const Partition& partition);

// Value of the concave term on a crisp partition (0 for kind none).
double concave_value(const ConcaveTermSpec& spec, const LabeledData& labeled,
                     const Partition& partition);

// Auction dynamics: `steps` rounds of linearize-then-assign, duals reset to
// zero each round per the scheme; exits early when the partition repeats.
//
// diffusion_steps > 0 smooths the class indicators before each linearization
// (that many rounds of degree-normalized neighbor averaging with labeled
// rows pinned to their labels). This is the role of the scheme's time-step
// input: one-hop coefficients (diffusion_steps = 0) cannot carry label
// information beyond immediate neighborhoods and freeze in patchy local
// minima on sparse graphs.
// self_weight optionally supplies per-point diagonal weights of the
// underlying weight matrix (the graph itself stores only off-diagonal
// entries). The self term lands in every class's complement sum except the
// point's own, exactly as the coefficient formula reads on a matrix with a
// diagonal; it does not change the crisp-partition heat content.
SSLResult ssl_classify(const SparseGraph& graph, const LabeledData& labeled,
                       const ClassBoundsSpec& bounds_spec,
                       const ConcaveTermSpec& concave_spec,
                       const AuctionSchedule& schedule, int steps, int n_classes,
                       std::uint64_t seed, int diffusion_steps = 0,
                       const std::vector<double>* self_weight = nullptr,
                       std::ostream* verbose = nullptr);

}  // namespace malady
