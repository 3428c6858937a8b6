#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "malady/matrix.hpp"

namespace malady {

enum class FileFormat { csv, binary };

// Label column selector: nullopt = no labels, kLastColumn = final column,
// otherwise a zero-based column index.
inline constexpr int kLastColumn = -1;

struct Dataset {
  FeatureMatrix features;
  std::vector<int> labels;             // dense 0..K-1; empty if no label column
  std::vector<long long> label_map;    // dense index -> original label value
  int n_classes() const { return static_cast<int>(label_map.size()); }
};

// CSV: one row per point, comma-separated decimal floats, optional integer
// label column. Binary: u64 N, u64 d (little endian) then N*d f64 row-major.
Dataset load_dataset(const std::string& path, FileFormat format,
                     std::optional<int> label_column);

void write_features_csv(const Dataset& dataset, std::ostream& out);
void write_features_binary(const FeatureMatrix& features, std::ostream& out);

// Gaussian clusters with centers evenly spaced on the unit circle and labels
// alternating between two classes.
struct SyntheticBlobsSpec {
  int clusters = 6;
  int points_per_cluster = 400;
  double stddev = 0.25;
};

Dataset generate_blobs(const SyntheticBlobsSpec& spec, std::uint64_t seed);

// Fraction of eval_indices where predicted == truth. An empty evaluation set
// reports 1.0 by convention and sets *exhausted when provided.
double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth,
                const std::vector<int>& eval_indices, bool* exhausted = nullptr);

}  // namespace malady
