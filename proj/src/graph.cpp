#include "malady/graph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "malady/errors.hpp"

namespace malady {

namespace {

constexpr double kSigmaFloor = 1e-12;  // duplicated points give zero local scales

void check_finite(const FeatureMatrix& features) {
  for (double v : features.values) {
    if (!std::isfinite(v)) {
      throw invalid_parameter_error("feature matrix contains non-finite values");
    }
  }
}

double euclidean_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return std::sqrt(s);
}

double angular_distance(const double* a, const double* b, std::size_t d,
                        double norm_a, double norm_b) {
  double dot = 0.0;
  for (std::size_t k = 0; k < d; ++k) dot += a[k] * b[k];
  const double c = std::clamp(dot / (norm_a * norm_b), -1.0, 1.0);
  return std::acos(c);
}

// Runs fn(i) for i in [0, n) across a few threads; each index writes only its
// own output slot, so the result is order-independent.
template <class Fn>
void parallel_rows(std::size_t n, Fn&& fn) {
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t n_threads = std::min(hw, std::max<std::size_t>(1, n / 256));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  const std::size_t chunk = (n + n_threads - 1) / n_threads;
  for (std::size_t t = 0; t < n_threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::vector<double> row_norms(const FeatureMatrix& features) {
  std::vector<double> norms(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i) {
    double s = 0.0;
    const double* r = features.row(i);
    for (std::size_t k = 0; k < features.cols; ++k) s += r[k] * r[k];
    norms[i] = std::sqrt(s);
  }
  return norms;
}

}  // namespace

std::size_t KernelSpec::effective_rank() const {
  if (rank > 0) return rank;
  if (kind == KernelKind::cosine_local) return k_neighbors;
  return (k_neighbors + 1) / 2;  // ceil(k/2)
}

std::vector<std::vector<Neighbor>> knn_search(const FeatureMatrix& features,
                                              std::size_t k, Metric metric) {
  const std::size_t n = features.rows;
  const std::size_t d = features.cols;
  if (n == 0 || d == 0) throw invalid_parameter_error("empty feature matrix");
  if (k < 1 || k >= n) {
    throw invalid_parameter_error("k_neighbors must satisfy 1 <= k < N");
  }
  check_finite(features);

  std::vector<double> norms;
  if (metric == Metric::angular) {
    norms = row_norms(features);
    for (std::size_t i = 0; i < n; ++i) {
      if (norms[i] == 0.0) {
        throw invalid_parameter_error("angular metric requires nonzero vectors (row " +
                                      std::to_string(i) + ")");
      }
    }
  }

  std::vector<std::vector<Neighbor>> result(n);
  parallel_rows(n, [&](std::size_t i) {
    std::vector<std::pair<double, std::uint32_t>> dist;
    dist.reserve(n - 1);
    const double* ri = features.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dij = metric == Metric::euclidean
                             ? euclidean_distance(ri, features.row(j), d)
                             : angular_distance(ri, features.row(j), d, norms[i], norms[j]);
      dist.emplace_back(dij, static_cast<std::uint32_t>(j));
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                      dist.end());
    auto& out = result[i];
    out.resize(k);
    for (std::size_t r = 0; r < k; ++r) out[r] = {dist[r].second, dist[r].first};
  });
  return result;
}

double gaussian_weight(double dist, double sigma) {
  if (sigma <= 0.0) throw invalid_parameter_error("gaussian sigma must be positive");
  if (dist < 0.0) throw invalid_parameter_error("distance must be nonnegative");
  return std::exp(-(dist * dist) / (sigma * sigma));
}

double cosine_local_weight(std::span<const double> xi, std::span<const double> xj,
                           double sigma_i, double sigma_j) {
  double ni = 0.0, nj = 0.0, dot = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    ni += xi[k] * xi[k];
    nj += xj[k] * xj[k];
    dot += xi[k] * xj[k];
  }
  if (ni == 0.0 || nj == 0.0) {
    throw invalid_parameter_error("cosine weight undefined for zero vectors");
  }
  const double c = std::clamp(dot / (std::sqrt(ni) * std::sqrt(nj)), -1.0, 1.0);
  const double d = std::acos(c);
  const double si = std::max(sigma_i, kSigmaFloor);
  const double sj = std::max(sigma_j, kSigmaFloor);
  return std::exp(-(d * d) / (si * sj));
}

SparseGraph build_graph(const FeatureMatrix& features, const KernelSpec& spec) {
  const std::size_t n = features.rows;
  const std::size_t k = spec.k_neighbors;
  if (spec.kind == KernelKind::gaussian && spec.scale_mode == ScaleMode::global &&
      spec.sigma <= 0.0) {
    throw invalid_parameter_error("global sigma must be positive");
  }
  const std::size_t rank = spec.effective_rank();
  if (rank < 1 || rank > k) {
    throw invalid_parameter_error("local scale rank must satisfy 1 <= M <= k_neighbors");
  }

  const auto knn = knn_search(features, k, spec.metric());

  // Per-point local scales from the rank-th neighbour distance.
  std::vector<double> sigma(n, spec.sigma);
  if (spec.kind == KernelKind::cosine_local) {
    for (std::size_t i = 0; i < n; ++i) {
      const double dm = knn[i][rank - 1].distance;
      sigma[i] = std::max(dm * dm, kSigmaFloor);  // sqrt(sigma_i) = d(x_i, x_M)
    }
  } else if (spec.scale_mode == ScaleMode::local_rank) {
    for (std::size_t i = 0; i < n; ++i) {
      sigma[i] = std::max(knn[i][rank - 1].distance, kSigmaFloor);
    }
  }

  // Directed kernel weights on the kNN edges.
  auto directed_weight = [&](std::size_t i, const Neighbor& nb) {
    if (spec.kind == KernelKind::cosine_local) {
      const double d = nb.distance;
      return std::exp(-(d * d) / (sigma[i] * sigma[nb.index]));
    }
    if (spec.scale_mode == ScaleMode::global) {
      return gaussian_weight(nb.distance, spec.sigma);
    }
    const double d = nb.distance;
    return std::exp(-(d * d) / (sigma[i] * sigma[nb.index]));
  };

  // Symmetrize: each directed edge contributes w/2 to both orientations.
  // Accumulating both (i,j) and (j,i) from the same two halves keeps the
  // stored weights bit-identical across the pair.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i].reserve(2 * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (const Neighbor& nb : knn[i]) {
      const double half = 0.5 * directed_weight(i, nb);
      rows[i].emplace_back(nb.index, half);
      rows[nb.index].emplace_back(static_cast<std::uint32_t>(i), half);
    }
  }

  SparseGraph g;
  g.n = n;
  g.row_offsets.assign(n + 1, 0);
  g.cols.reserve(2 * n * k);
  g.weights.reserve(2 * n * k);
  g.degrees.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = rows[i];
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double degree = 0.0;
    std::size_t r = 0;
    while (r < row.size()) {
      const std::uint32_t col = row[r].first;
      double w = 0.0;
      while (r < row.size() && row[r].first == col) w += row[r++].second;
      if (w == 0.0) continue;  // kernel underflow: drop the edge entirely
      g.cols.push_back(col);
      g.weights.push_back(w);
      degree += w;
    }
    g.degrees[i] = degree;
    g.row_offsets[i + 1] = g.cols.size();
  }
  return g;
}

void write_edge_list_csv(const SparseGraph& graph, std::ostream& out) {
  char buf[64];
  out << "i,j,w\n";
  for (std::size_t i = 0; i < graph.n; ++i) {
    for (std::size_t e = graph.row_begin(i); e < graph.row_end(i); ++e) {
      std::snprintf(buf, sizeof(buf), "%.17g", graph.weights[e]);
      out << i << ',' << graph.cols[e] << ',' << buf << '\n';
    }
  }
}

}  // namespace malady
