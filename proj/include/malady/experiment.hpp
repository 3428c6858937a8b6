#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "malady/active.hpp"
#include "malady/dataset.hpp"
#include "malady/graph.hpp"

namespace malady {

enum class DatasetKind { csv, binary, blobs };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::blobs;
  std::string path;                       // csv / binary
  std::optional<int> label_column;        // csv / binary
  SyntheticBlobsSpec blobs;
  std::uint64_t blobs_seed = 0;
};

struct ConcaveConfig {
  ConcaveKind kind = ConcaveKind::none;
  double gamma = 1.0;
  std::string linear_path;  // CSV of an N x K gradient matrix
};

struct BoundsConfig {
  BoundsMode mode = BoundsMode::exact;
  double slack = 0.0;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  KernelSpec kernel;
  BoundsConfig bounds;
  ConcaveConfig concave;
  AuctionSchedule schedule;
  int steps = 100;
  int diffusion_steps = 0;  // indicator smoothing rounds per scheme step
  ALBudget budget;
  Acquisition acquisition = Acquisition::malady;
  std::vector<std::uint64_t> seeds;
  std::string output;
};

// Strict parse of the experiment JSON: unknown keys anywhere are rejected.
ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

// FNV-1a over the canonical serialized config; 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunRecord record;  // valid when ok
};

struct ExperimentSummary {
  std::string out_dir;            // <output>/<config-hash>
  std::string hash;
  std::vector<SeedOutcome> outcomes;
  std::vector<int> curve_num_labeled;
  std::vector<double> curve_mean;
  std::vector<double> curve_std;
  double final_mean = 0.0;
  double final_std = 0.0;
  double wall_seconds = 0.0;
};

// Builds the graph once, runs one active-learning loop per seed (seeds run
// concurrently), writes seed-<s>.csv per seed plus curve.csv and
// aggregate.json under <output>/<config-hash>/. Per-seed failures are
// recorded in the aggregate without aborting the other seeds.
ExperimentSummary run_experiment(const ExperimentConfig& config,
                                 std::ostream* log = nullptr);

void write_run_record_csv(const RunRecord& record, std::ostream& out);

}  // namespace malady
