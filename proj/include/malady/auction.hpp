#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "malady/matrix.hpp"

namespace malady {

inline constexpr int kUnassigned = -1;

// Per-class membership bounds for the assignment problem.
struct Bounds {
  std::vector<int> lower;  // B
  std::vector<int> upper;  // U

  int n_classes() const { return static_cast<int>(lower.size()); }
  static Bounds exact(std::vector<int> volumes);
  static Bounds unconstrained(int n_classes, int n_elements);

  // Throws invalid_parameter_error on malformed bounds and
  // infeasibility_error when no complete assignment of n_elements can
  // satisfy them.
  void validate(int n_elements) const;
};

// Benefit coefficients a_i(x): one row per assignable element, one column per
// class. row_points optionally records which global data point each row is
// (empty means rows are their own ids).
struct CoefficientMatrix {
  int n_rows = 0;
  int n_classes = 0;
  std::vector<double> values;   // row-major
  std::vector<int> row_points;

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * n_classes + c]; }
  const double* row(int r) const { return values.data() + static_cast<std::size_t>(r) * n_classes; }
  int point_of_row(int r) const { return row_points.empty() ? r : row_points[r]; }
};

// Class assignment over the auction's elements, plus each assigned element's
// stored bid. Member lists are derived from the assignment array so the two
// can never disagree.
struct Partition {
  std::vector<int> assignment;  // class index or kUnassigned
  std::vector<double> bid;
  int n_classes = 0;

  int size() const { return static_cast<int>(assignment.size()); }
  bool complete() const;
  std::vector<int> counts() const;
  std::vector<std::vector<int>> members() const;  // per class, ascending indices
};

struct BestSecond {
  int best_class;
  double best_value;    // max_i a_i - d_i
  int second_class;
  double second_value;  // max over i != best_class
};

// Argmax and runner-up of a_i - d_i over classes; ties go to the lowest
// index. Requires K >= 2.
BestSecond best_and_second(const double* a_row, const double* d, int n_classes);

// Dual prices and incentives. At every auction return p = max(d, 0) and
// t = max(-d, 0) hold elementwise, so p .* t = 0 and p - t = d exactly.
struct AuctionResult {
  Partition partition;
  std::vector<double> price;      // p
  std::vector<double> incentive;  // t
  std::vector<double> net;        // d = p - t
};

struct AuctionSchedule {
  double epsilon0 = 1e-7;
  double epsilon_min = 1e-6;
  double alpha = 4.0;

  void validate() const;
};

// Exact-volume auction: |members_i| = volumes[i] on return, epsilon-CS with
// respect to the final prices.
AuctionResult membership_auction(double eps, const std::vector<int>& volumes,
                                 const CoefficientMatrix& a,
                                 const std::vector<double>& p0);

// Upper bound auction: complete matching with |members_i| <= U_i, epsilon-CS
// with respect to net values d, warm-started from (p0, t0). Elements start
// unassigned regardless of any prior partition.
AuctionResult upper_bound_auction(double eps, const Bounds& bounds,
                                  const CoefficientMatrix& a,
                                  const std::vector<double>& p0,
                                  const std::vector<double>& t0);

// Lower bound auction: repairs lower-bound deficiencies of a complete,
// upper-feasible, epsilon-CS matching by transferring the cheapest elements
// into deficient classes, paying incentives as needed.
AuctionResult lower_bound_auction(double eps, const Bounds& bounds,
                                  const CoefficientMatrix& a,
                                  const std::vector<double>& p0,
                                  const std::vector<double>& t0,
                                  const Partition& start);

struct EpsCsResult {
  bool satisfied;
  double worst_violation;  // max over elements of best - assigned - eps
};

// Checks a_i(x) - p_i + t_i + eps >= max_j (a_j(x) - p_j + t_j) for every
// matched pair. `allowed`, when given, restricts the max to classes that can
// hold members (zero-capacity classes have no meaningful dual).
EpsCsResult check_eps_cs(const Partition& partition, const CoefficientMatrix& a,
                         const std::vector<double>& p, const std::vector<double>& t,
                         double eps, const std::vector<char>* allowed = nullptr);

double total_benefit(const CoefficientMatrix& a, const Partition& partition);

// Epsilon-scaled two-stage solve: UBA then LBA per round, duals warm-started
// across rounds, eps divided by alpha until it falls below
// epsilon_min / n_total. Returns the last completed round's result. When
// debug_stream is set, one JSON line per round is emitted.
AuctionResult scaled_auction(const CoefficientMatrix& a, const Bounds& bounds,
                             const AuctionSchedule& schedule, std::size_t n_total,
                             std::ostream* debug_stream = nullptr);

// Number of eps rounds scaled_auction will run for n_total elements.
int schedule_round_count(const AuctionSchedule& schedule, std::size_t n_total);

}  // namespace malady
