#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "malady/matrix.hpp"

namespace malady {

enum class Metric { euclidean, angular };

struct Neighbor {
  std::uint32_t index;
  double distance;
};

// Exact k-nearest-neighbour lists (brute force). Each point's list is sorted
// ascending by (distance, index) and excludes the point itself.
std::vector<std::vector<Neighbor>> knn_search(const FeatureMatrix& features,
                                              std::size_t k, Metric metric);

// exp(-dist^2 / sigma^2)
double gaussian_weight(double dist, double sigma);

// exp(-d(xi,xj)^2 / (sigma_i * sigma_j)) with d the angular distance
// arccos(<xi,xj> / (|xi||xj|)). The sigmas are the squared angular distances
// to each point's M-th neighbour, precomputed by the caller.
double cosine_local_weight(std::span<const double> xi, std::span<const double> xj,
                           double sigma_i, double sigma_j);

enum class KernelKind { gaussian, cosine_local };
enum class ScaleMode { global, local_rank };

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  std::size_t k_neighbors = 10;
  ScaleMode scale_mode = ScaleMode::local_rank;
  double sigma = 1.0;     // global mode only
  std::size_t rank = 0;   // local mode; 0 = default (ceil(k/2) gaussian, k cosine)

  std::size_t effective_rank() const;
  Metric metric() const {
    return kind == KernelKind::cosine_local ? Metric::angular : Metric::euclidean;
  }
};

// Symmetric weighted graph in CSR form, rows sorted by column index.
// Invariants: zero diagonal; entry (i,j) stored iff (j,i) stored, with
// bit-identical weight; degrees[i] is the row sum.
struct SparseGraph {
  std::size_t n = 0;
  std::vector<std::size_t> row_offsets;  // n + 1
  std::vector<std::uint32_t> cols;
  std::vector<double> weights;
  std::vector<double> degrees;

  std::size_t row_begin(std::size_t i) const { return row_offsets[i]; }
  std::size_t row_end(std::size_t i) const { return row_offsets[i + 1]; }
  std::size_t edge_count() const { return cols.size(); }
  double degree(std::size_t i) const { return degrees[i]; }
};

// Directed kNN kernel weights, symmetrized as (W_ij + W_ji) / 2 with missing
// entries treated as zero.
SparseGraph build_graph(const FeatureMatrix& features, const KernelSpec& spec);

// Debug export: one `i,j,w` line per stored entry, row-major.
void write_edge_list_csv(const SparseGraph& graph, std::ostream& out);

}  // namespace malady
