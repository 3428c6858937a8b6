#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "malady/dataset.hpp"
#include "malady/errors.hpp"
#include "malady/experiment.hpp"
#include "malady/graph.hpp"
#include "malady/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;

int cmd_run(const std::string& config_path, bool verbose) {
  const malady::ExperimentConfig config = malady::load_config(config_path);
  const malady::ExperimentSummary summary =
      malady::run_experiment(config, verbose ? &std::cerr : nullptr);
  std::cout << "wrote " << summary.out_dir << "\n";
  std::size_t failed = 0;
  for (const auto& outcome : summary.outcomes) {
    if (!outcome.ok) {
      ++failed;
      std::cerr << "seed " << outcome.seed << " failed: " << outcome.error << "\n";
    }
  }
  return failed == 0 ? kExitOk : kExitFailure;
}

int cmd_blobs(std::uint64_t seed, const std::string& out_path) {
  const malady::Dataset data = malady::generate_blobs(malady::SyntheticBlobsSpec{}, seed);
  std::ofstream out(out_path);
  if (!out) throw malady::io_error("cannot open " + out_path + " for writing");
  malady::write_features_csv(data, out);
  std::cout << "wrote " << data.features.rows << " points to " << out_path << "\n";
  return kExitOk;
}

int cmd_graph(const std::string& input, std::size_t k, const std::string& kernel,
              std::optional<int> label_column, double sigma, const std::string& out_path) {
  const malady::Dataset data =
      malady::load_dataset(input, malady::FileFormat::csv, label_column);
  malady::KernelSpec spec;
  spec.k_neighbors = k;
  if (kernel == "gaussian") {
    spec.kind = malady::KernelKind::gaussian;
    if (sigma > 0.0) {
      spec.scale_mode = malady::ScaleMode::global;
      spec.sigma = sigma;
    }
  } else if (kernel == "cosine") {
    spec.kind = malady::KernelKind::cosine_local;
  } else {
    throw malady::invalid_parameter_error("kernel must be gaussian or cosine");
  }
  const malady::SparseGraph graph = malady::build_graph(data.features, spec);
  std::ofstream out(out_path);
  if (!out) throw malady::io_error("cannot open " + out_path + " for writing");
  malady::write_edge_list_csv(graph, out);
  std::cout << "wrote " << graph.edge_count() << " entries to " << out_path << "\n";
  return kExitOk;
}

int cmd_verify(std::uint64_t seed) {
  bool all_ok = true;
  for (const malady::CheckResult& check : malady::run_verification_suite(seed)) {
    std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << check.name << " ("
              << check.detail << ")\n";
    all_ok &= check.passed;
  }
  return all_ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MALADY: graph-based semi-supervised classification via auction "
               "dynamics with active learning"};
  app.require_subcommand(1);

  std::string config_path;
  bool verbose = false;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "experiment config JSON")->required();
  run->add_flag("--verbose", verbose, "log progress to stderr");

  std::uint64_t blobs_seed = 0;
  std::string blobs_out;
  auto* blobs = app.add_subcommand("blobs", "generate the six-cluster toy dataset");
  blobs->add_option("--seed", blobs_seed, "generator seed")->required();
  blobs->add_option("--out", blobs_out, "output CSV path")->required();

  std::string graph_input, graph_kernel = "gaussian", graph_out;
  std::size_t graph_k = 10;
  double graph_sigma = 0.0;
  int graph_label_column = -3;
  auto* graph = app.add_subcommand("graph", "build a kNN graph and export edges");
  graph->add_option("--input", graph_input, "feature CSV")->required();
  graph->add_option("--k", graph_k, "number of neighbors");
  graph->add_option("--kernel", graph_kernel, "gaussian or cosine");
  graph->add_option("--sigma", graph_sigma, "global sigma for the gaussian kernel");
  graph->add_option("--label-column", graph_label_column,
                    "label column to strip (-1 = last)");
  graph->add_option("--out", graph_out, "output edge-list CSV")->required();

  std::uint64_t verify_seed = 20250901;
  auto* verify = app.add_subcommand("verify", "run the oracle-backed property suite");
  verify->add_option("--seed", verify_seed, "fuzz seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, verbose);
    if (blobs->parsed()) return cmd_blobs(blobs_seed, blobs_out);
    if (graph->parsed()) {
      std::optional<int> label_column;
      if (graph_label_column != -3) label_column = graph_label_column;
      return cmd_graph(graph_input, graph_k, graph_kernel, label_column, graph_sigma,
                       graph_out);
    }
    if (verify->parsed()) return cmd_verify(verify_seed);
  } catch (const malady::invalid_parameter_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const malady::invalid_state_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const malady::infeasibility_error& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const malady::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
