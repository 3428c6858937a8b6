#include "malady/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "malady/errors.hpp"
#include "malady/rng.hpp"

namespace malady {

std::vector<int> LabeledData::class_counts(int n_classes) const {
  std::vector<int> counts(n_classes, 0);
  for (int l : labels) ++counts[l];
  return counts;
}

void LabeledData::validate(std::size_t n_points, int n_classes) const {
  if (indices.size() != labels.size()) {
    throw invalid_parameter_error("labeled indices and labels differ in length");
  }
  std::vector<char> seen(n_points, 0);
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const int x = indices[j];
    if (x < 0 || static_cast<std::size_t>(x) >= n_points) {
      throw invalid_parameter_error("labeled index out of range");
    }
    if (seen[x]) throw invalid_parameter_error("labeled indices must be distinct");
    seen[x] = 1;
    if (labels[j] < 0 || labels[j] >= n_classes) {
      throw invalid_parameter_error("label out of class range");
    }
  }
}

Bounds derive_unlabeled_bounds(const ClassBoundsSpec& spec, const LabeledData& labeled,
                               int n_unlabeled, int n_classes) {
  Bounds bounds;
  bounds.lower.assign(n_classes, 0);
  bounds.upper.assign(n_classes, n_unlabeled);
  if (spec.mode != BoundsMode::none) {
    if (static_cast<int>(spec.true_sizes.size()) != n_classes) {
      throw invalid_parameter_error("true class sizes required for exact/flexible bounds");
    }
    if (spec.mode == BoundsMode::flexible && (spec.slack < 0.0 || spec.slack > 1.0)) {
      throw invalid_parameter_error("flexible slack must lie in [0, 1]");
    }
    const std::vector<int> counts = labeled.class_counts(n_classes);
    for (int i = 0; i < n_classes; ++i) {
      const int base = spec.true_sizes[i] - counts[i];
      if (base < 0) {
        throw invalid_parameter_error("labeled count exceeds the true size of class " +
                                      std::to_string(i));
      }
      if (spec.mode == BoundsMode::exact) {
        bounds.lower[i] = bounds.upper[i] = base;
      } else {
        // Nudge the products so binary rounding of the slack cannot move a
        // humanly-exact bound across an integer.
        const double lo = (1.0 - spec.slack) * base;
        const double hi = (1.0 + spec.slack) * base;
        bounds.lower[i] = static_cast<int>(std::floor(lo + 1e-9 * std::max(1.0, lo)));
        bounds.upper[i] = static_cast<int>(std::ceil(hi - 1e-9 * std::max(1.0, hi)));
        bounds.lower[i] = std::clamp(bounds.lower[i], 0, n_unlabeled);
        bounds.upper[i] = std::clamp(bounds.upper[i], 0, n_unlabeled);
      }
    }
  }
  bounds.validate(n_unlabeled);
  return bounds;
}

Partition initial_partition(const SparseGraph& graph, const LabeledData& labeled,
                            const Bounds& bounds, std::uint64_t seed) {
  const std::size_t n = graph.n;
  const int K = bounds.n_classes();
  labeled.validate(n, K);

  Partition part;
  part.n_classes = K;
  part.assignment.assign(n, kUnassigned);
  part.bid.assign(n, 0.0);
  for (int j = 0; j < labeled.size(); ++j) {
    part.assignment[labeled.indices[j]] = labeled.labels[j];
  }

  std::vector<int> unlabeled;
  unlabeled.reserve(n);
  for (std::size_t x = 0; x < n; ++x) {
    if (part.assignment[x] == kUnassigned) unlabeled.push_back(static_cast<int>(x));
  }
  bounds.validate(static_cast<int>(unlabeled.size()));

  Rng rng(seed);
  rng.shuffle(unlabeled);

  std::vector<int> counts(K, 0);
  std::size_t next = 0;
  for (int i = 0; i < K; ++i) {
    for (int c = 0; c < bounds.lower[i]; ++c) {
      part.assignment[unlabeled[next++]] = i;
      ++counts[i];
    }
  }
  for (; next < unlabeled.size(); ++next) {
    int open = 0;
    for (int i = 0; i < K; ++i) open += counts[i] < bounds.upper[i];
    int pick = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(open)));
    for (int i = 0; i < K; ++i) {
      if (counts[i] >= bounds.upper[i]) continue;
      if (pick-- == 0) {
        part.assignment[unlabeled[next]] = i;
        ++counts[i];
        break;
      }
    }
  }
  return part;
}

DenseMatrix concave_gradient(const ConcaveTermSpec& spec, const LabeledData& labeled,
                             int n_classes, std::size_t n_points) {
  switch (spec.kind) {
    case ConcaveKind::none:
      return DenseMatrix(n_points, n_classes, 0.0);
    case ConcaveKind::linear:
      if (spec.linear.rows != n_points ||
          spec.linear.cols != static_cast<std::size_t>(n_classes)) {
        throw invalid_parameter_error("linear concave matrix must be N x K");
      }
      for (double v : spec.linear.values) {
        if (!std::isfinite(v)) {
          throw invalid_parameter_error("linear concave matrix must be finite");
        }
      }
      return spec.linear;
    case ConcaveKind::poisson:
      break;
  }
  if (!(spec.gamma > 0.0)) throw invalid_parameter_error("poisson gamma must be positive");
  DenseMatrix grad(n_points, n_classes, 0.0);
  if (labeled.size() == 0) return grad;
  std::vector<double> lbar(n_classes, 0.0);
  for (int l : labeled.labels) lbar[l] += 1.0;
  for (double& v : lbar) v /= labeled.size();
  for (int j = 0; j < labeled.size(); ++j) {
    double* row = grad.row(labeled.indices[j]);
    for (int i = 0; i < n_classes; ++i) {
      const double e = i == labeled.labels[j] ? 1.0 : 0.0;
      row[i] = -spec.gamma * (e - lbar[i]);
    }
  }
  return grad;
}

namespace {

// a_i(x) = 1 - grad_i(x) - (degree(x) - sum_y w(x,y) field_i(y)). With crisp
// indicator fields this is exactly the coefficient of the linearized heat
// content; per-point class masses come from one sparse-row scan.
CoefficientMatrix coefficients_from_field(const SparseGraph& graph,
                                          const DenseMatrix& field,
                                          const DenseMatrix& grad,
                                          const std::vector<int>& unlabeled,
                                          const std::vector<double>* self_weight) {
  const int K = static_cast<int>(field.cols);
  CoefficientMatrix a;
  a.n_rows = static_cast<int>(unlabeled.size());
  a.n_classes = K;
  a.values.resize(unlabeled.size() * static_cast<std::size_t>(K));
  a.row_points = unlabeled;

  std::vector<double> class_mass(K);
  for (int r = 0; r < a.n_rows; ++r) {
    const auto x = static_cast<std::size_t>(unlabeled[r]);
    std::fill(class_mass.begin(), class_mass.end(), 0.0);
    for (std::size_t e = graph.row_begin(x); e < graph.row_end(x); ++e) {
      const double* f = field.row(graph.cols[e]);
      const double w = graph.weights[e];
      for (int i = 0; i < K; ++i) class_mass[i] += w * f[i];
    }
    double deg = graph.degree(x);
    if (self_weight) {
      // Weight matrices with a diagonal keep the self term in the
      // complement sum: it lands on every class except the point's own.
      const double s = (*self_weight)[x];
      deg += s;
      const double* f = field.row(x);
      for (int i = 0; i < K; ++i) class_mass[i] += s * f[i];
    }
    double* row = a.values.data() + static_cast<std::size_t>(r) * K;
    const double* g = grad.row(x);
    for (int i = 0; i < K; ++i) {
      row[i] = 1.0 - g[i] - (deg - class_mass[i]);
    }
  }
  return a;
}

DenseMatrix indicator_field(const Partition& partition) {
  DenseMatrix field(partition.assignment.size(), partition.n_classes, 0.0);
  for (std::size_t x = 0; x < partition.assignment.size(); ++x) {
    field.at(x, partition.assignment[x]) = 1.0;
  }
  return field;
}

// Degree-normalized neighbor averaging with labeled rows pinned. Isolated
// points keep their current value.
void smooth_field(const SparseGraph& graph, const LabeledData& labeled, int rounds,
                  DenseMatrix& field, DenseMatrix& scratch) {
  const int K = static_cast<int>(field.cols);
  for (int s = 0; s < rounds; ++s) {
    for (std::size_t x = 0; x < graph.n; ++x) {
      double* out = scratch.row(x);
      std::fill(out, out + K, 0.0);
      for (std::size_t e = graph.row_begin(x); e < graph.row_end(x); ++e) {
        const double* f = field.row(graph.cols[e]);
        const double w = graph.weights[e];
        for (int i = 0; i < K; ++i) out[i] += w * f[i];
      }
      const double deg = graph.degree(x);
      if (deg > 0.0) {
        for (int i = 0; i < K; ++i) out[i] /= deg;
      } else {
        const double* f = field.row(x);
        for (int i = 0; i < K; ++i) out[i] = f[i];
      }
    }
    std::swap(field.values, scratch.values);
    for (int j = 0; j < labeled.size(); ++j) {
      double* row = field.row(labeled.indices[j]);
      std::fill(row, row + K, 0.0);
      row[labeled.labels[j]] = 1.0;
    }
  }
}

}  // namespace

CoefficientMatrix assignment_coefficients(const SparseGraph& graph,
                                          const Partition& partition,
                                          const DenseMatrix& grad,
                                          const std::vector<int>& unlabeled) {
  if (!partition.complete()) {
    throw invalid_parameter_error("coefficients require a complete partition");
  }
  return coefficients_from_field(graph, indicator_field(partition), grad, unlabeled,
                                 nullptr);
}

double ghc_energy(const SparseGraph& graph, const Partition& partition) {
  if (!partition.complete()) {
    throw invalid_parameter_error("ghc_energy requires a complete partition");
  }
  double energy = 0.0;
  for (std::size_t x = 0; x < graph.n; ++x) {
    const int cx = partition.assignment[x];
    for (std::size_t e = graph.row_begin(x); e < graph.row_end(x); ++e) {
      if (partition.assignment[graph.cols[e]] != cx) energy += graph.weights[e];
    }
  }
  return energy;
}

double concave_value(const ConcaveTermSpec& spec, const LabeledData& labeled,
                     const Partition& partition) {
  switch (spec.kind) {
    case ConcaveKind::none:
      return 0.0;
    case ConcaveKind::linear: {
      double v = 0.0;
      for (int x = 0; x < partition.size(); ++x) {
        v += spec.linear.at(x, partition.assignment[x]);
      }
      return v;
    }
    case ConcaveKind::poisson:
      break;
  }
  if (labeled.size() == 0) return 0.0;
  std::vector<double> lbar(partition.n_classes, 0.0);
  for (int l : labeled.labels) lbar[l] += 1.0;
  for (double& v : lbar) v /= labeled.size();
  double value = 0.0;
  for (int j = 0; j < labeled.size(); ++j) {
    const int cls = partition.assignment[labeled.indices[j]];
    const double e = cls == labeled.labels[j] ? 1.0 : 0.0;
    value += e - lbar[cls];
  }
  return -spec.gamma * value;
}

SSLResult ssl_classify(const SparseGraph& graph, const LabeledData& labeled,
                       const ClassBoundsSpec& bounds_spec,
                       const ConcaveTermSpec& concave_spec,
                       const AuctionSchedule& schedule, int steps, int n_classes,
                       std::uint64_t seed, int diffusion_steps,
                       const std::vector<double>* self_weight, std::ostream* verbose) {
  if (n_classes < 2) throw invalid_parameter_error("classification requires K >= 2");
  if (steps < 0) throw invalid_parameter_error("steps must be nonnegative");
  if (diffusion_steps < 0) {
    throw invalid_parameter_error("diffusion_steps must be nonnegative");
  }
  if (self_weight && self_weight->size() != graph.n) {
    throw invalid_parameter_error("self_weight must have one entry per point");
  }
  schedule.validate();
  labeled.validate(graph.n, n_classes);

  std::vector<int> unlabeled;
  {
    std::vector<char> is_labeled(graph.n, 0);
    for (int x : labeled.indices) is_labeled[x] = 1;
    for (std::size_t x = 0; x < graph.n; ++x) {
      if (!is_labeled[x]) unlabeled.push_back(static_cast<int>(x));
    }
  }
  const Bounds bounds = derive_unlabeled_bounds(bounds_spec, labeled,
                                                static_cast<int>(unlabeled.size()),
                                                n_classes);

  SSLResult out;
  out.price.assign(n_classes, 0.0);
  out.incentive.assign(n_classes, 0.0);
  out.partition = initial_partition(graph, labeled, bounds, seed);
  if (unlabeled.empty()) return out;  // nothing to assign

  const DenseMatrix grad = concave_gradient(concave_spec, labeled, n_classes, graph.n);
  const int rounds = schedule_round_count(schedule, graph.n);
  DenseMatrix scratch;
  if (diffusion_steps > 0) scratch = DenseMatrix(graph.n, n_classes);

  for (int step = 0; step < steps; ++step) {
    CoefficientMatrix a;
    if (diffusion_steps > 0) {
      DenseMatrix field = indicator_field(out.partition);
      smooth_field(graph, labeled, diffusion_steps, field, scratch);
      a = coefficients_from_field(graph, field, grad, unlabeled, self_weight);
    } else {
      a = coefficients_from_field(graph, indicator_field(out.partition), grad,
                                  unlabeled, self_weight);
    }
    AuctionResult res = scaled_auction(a, bounds, schedule, graph.n);

    int changed = 0;
    for (int r = 0; r < a.n_rows; ++r) {
      const int x = unlabeled[r];
      const int cls = res.partition.assignment[r];
      changed += out.partition.assignment[x] != cls;
      out.partition.assignment[x] = cls;
      out.partition.bid[x] = res.partition.bid[r];
    }
    out.price = std::move(res.price);
    out.incentive = std::move(res.incentive);
    out.final_coefficients = std::move(a);
    const double energy = ghc_energy(graph, out.partition) +
                          concave_value(concave_spec, labeled, out.partition);
    out.energy_trace.push_back(energy);
    ++out.steps_run;
    if (verbose) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", energy);
      *verbose << "{\"step\":" << step << ",\"energy\":" << buf
               << ",\"changed_points\":" << changed
               << ",\"rounds_of_epsilon\":" << rounds << "}\n";
    }
    if (changed == 0) break;  // linearization is stationary from here on
  }
  return out;
}

}  // namespace malady
