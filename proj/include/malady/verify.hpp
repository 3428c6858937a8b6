#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "malady/auction.hpp"
#include "malady/graph.hpp"
#include "malady/matrix.hpp"
#include "malady/oracle.hpp"
#include "malady/rng.hpp"

namespace malady {

// Conversions between dense matrices and the CSR graph, for oracle-backed
// checks and constructed test graphs. graph_from_dense requires a symmetric
// nonnegative matrix with zero diagonal.
SparseGraph graph_from_dense(const DenseMatrix& weights);
DenseMatrix dense_from_graph(const SparseGraph& graph);

// Random instance generators shared by the verification suite, the unit
// tests and the acceptance suite.
SmallInstance random_exact_instance(Rng& rng, int n, int n_classes);
SmallInstance random_bounded_instance(Rng& rng, int n, int n_classes);

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;
};

// Oracle-backed property checks behind `malady verify`.
CheckResult check_membership_near_optimality(std::uint64_t seed, int n_instances);
CheckResult check_two_stage_feasibility(std::uint64_t seed, int n_instances);
CheckResult check_dual_consistency(std::uint64_t seed, int n_instances);
CheckResult check_coefficient_equivalence(std::uint64_t seed, int n_graphs);
CheckResult check_margin_invariances(std::uint64_t seed, int n_vectors);

std::vector<CheckResult> run_verification_suite(std::uint64_t seed);

}  // namespace malady
