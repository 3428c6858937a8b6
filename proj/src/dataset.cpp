#include "malady/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "malady/errors.hpp"
#include "malady/rng.hpp"

namespace malady {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& what) {
  throw io_error(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<long long> remap_labels(std::vector<long long>& raw, std::vector<int>& out) {
  std::map<long long, int> dense;
  for (long long v : raw) dense.emplace(v, 0);
  std::vector<long long> mapping;
  mapping.reserve(dense.size());
  for (auto& [value, idx] : dense) {
    idx = static_cast<int>(mapping.size());
    mapping.push_back(value);
  }
  out.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = dense[raw[i]];
  return mapping;
}

Dataset load_csv(const std::string& path, std::optional<int> label_column) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      const std::string cell = line.substr(pos, comma - pos);
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) {
          ++used;
        }
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        parse_fail(path, line_no, "cannot parse value '" + cell + "'");
      }
      pos = comma + 1;
      if (comma == line.size()) break;
    }
    if (width == 0) {
      width = row.size();
    } else if (row.size() != width) {
      parse_fail(path, line_no, "row has " + std::to_string(row.size()) +
                                    " values, expected " + std::to_string(width));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error(path + ": no data rows");

  int label_col = -1;
  if (label_column) {
    label_col = *label_column == kLastColumn ? static_cast<int>(width) - 1 : *label_column;
    if (label_col < 0 || label_col >= static_cast<int>(width)) {
      throw invalid_parameter_error("label column out of range");
    }
    if (width < 2) throw io_error(path + ": no feature columns besides the label");
  }

  Dataset ds;
  const std::size_t d = label_column ? width - 1 : width;
  ds.features = FeatureMatrix(rows.size(), d);
  std::vector<long long> raw_labels;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::size_t c_out = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (label_column && static_cast<int>(c) == label_col) {
        const double v = rows[r][c];
        if (v != std::floor(v) || !std::isfinite(v)) {
          parse_fail(path, r + 1, "label is not an integer");
        }
        raw_labels.push_back(static_cast<long long>(v));
      } else {
        ds.features.at(r, c_out++) = rows[r][c];
      }
    }
  }
  if (label_column) ds.label_map = remap_labels(raw_labels, ds.labels);
  return ds;
}

Dataset load_binary(const std::string& path, std::optional<int> label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::uint64_t n = 0, d = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&d), sizeof d);
  if (!in) throw io_error(path + ": truncated header");
  if (n == 0 || d == 0 || n * d > (1ull << 32)) {
    throw io_error(path + ": implausible matrix header");
  }
  std::vector<double> values(n * d);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw io_error(path + ": truncated payload");

  Dataset ds;
  if (!label_column) {
    ds.features = FeatureMatrix(n, d);
    ds.features.values = std::move(values);
    return ds;
  }
  const int label_col = *label_column == kLastColumn ? static_cast<int>(d) - 1 : *label_column;
  if (label_col < 0 || label_col >= static_cast<int>(d)) {
    throw invalid_parameter_error("label column out of range");
  }
  if (d < 2) throw io_error(path + ": no feature columns besides the label");
  ds.features = FeatureMatrix(n, d - 1);
  std::vector<long long> raw_labels;
  raw_labels.reserve(n);
  for (std::uint64_t r = 0; r < n; ++r) {
    std::size_t c_out = 0;
    for (std::uint64_t c = 0; c < d; ++c) {
      const double v = values[r * d + c];
      if (static_cast<int>(c) == label_col) {
        if (v != std::floor(v) || !std::isfinite(v)) {
          parse_fail(path, r + 1, "label is not an integer");
        }
        raw_labels.push_back(static_cast<long long>(v));
      } else {
        ds.features.at(r, c_out++) = v;
      }
    }
  }
  ds.label_map = remap_labels(raw_labels, ds.labels);
  return ds;
}

}  // namespace

Dataset load_dataset(const std::string& path, FileFormat format,
                     std::optional<int> label_column) {
  return format == FileFormat::csv ? load_csv(path, label_column)
                                   : load_binary(path, label_column);
}

void write_features_csv(const Dataset& dataset, std::ostream& out) {
  char buf[64];
  for (std::size_t r = 0; r < dataset.features.rows; ++r) {
    for (std::size_t c = 0; c < dataset.features.cols; ++c) {
      if (c) out << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", dataset.features.at(r, c));
      out << buf;
    }
    if (!dataset.labels.empty()) {
      out << ',' << dataset.label_map[dataset.labels[r]];
    }
    out << '\n';
  }
}

void write_features_binary(const FeatureMatrix& features, std::ostream& out) {
  const std::uint64_t n = features.rows, d = features.cols;
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  out.write(reinterpret_cast<const char*>(features.values.data()),
            static_cast<std::streamsize>(features.values.size() * sizeof(double)));
}

Dataset generate_blobs(const SyntheticBlobsSpec& spec, std::uint64_t seed) {
  if (spec.clusters < 2 || spec.points_per_cluster < 1 || !(spec.stddev > 0.0)) {
    throw invalid_parameter_error("invalid blob spec");
  }
  const int n = spec.clusters * spec.points_per_cluster;
  Dataset ds;
  ds.features = FeatureMatrix(n, 2);
  ds.labels.resize(n);
  ds.label_map = {0, 1};
  Rng rng(seed);
  const double tau = 6.283185307179586476925286766559;
  int r = 0;
  for (int c = 0; c < spec.clusters; ++c) {
    const double cx = std::cos(tau * c / spec.clusters);
    const double cy = std::sin(tau * c / spec.clusters);
    for (int j = 0; j < spec.points_per_cluster; ++j, ++r) {
      ds.features.at(r, 0) = cx + spec.stddev * rng.next_normal();
      ds.features.at(r, 1) = cy + spec.stddev * rng.next_normal();
      ds.labels[r] = c % 2;
    }
  }
  return ds;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth,
                const std::vector<int>& eval_indices, bool* exhausted) {
  if (exhausted) *exhausted = eval_indices.empty();
  if (eval_indices.empty()) return 1.0;
  std::size_t correct = 0;
  for (int x : eval_indices) {
    if (x < 0 || static_cast<std::size_t>(x) >= predicted.size() ||
        static_cast<std::size_t>(x) >= truth.size()) {
      throw invalid_parameter_error("evaluation index out of range");
    }
    correct += predicted[x] == truth[x];
  }
  return static_cast<double>(correct) / static_cast<double>(eval_indices.size());
}

}  // namespace malady
