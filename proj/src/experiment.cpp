#include "malady/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "malady/errors.hpp"

namespace malady {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok |= it.key() == k;
    if (!ok) {
      throw invalid_parameter_error("unknown config key '" + it.key() + "' in " + where);
    }
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

DatasetConfig parse_dataset(const json& j) {
  if (!j.is_object()) throw invalid_parameter_error("dataset must be an object");
  reject_unknown_keys(j, {"kind", "path", "label_column", "blobs", "blobs_seed"},
                      "dataset");
  DatasetConfig cfg;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "csv") {
    cfg.kind = DatasetKind::csv;
  } else if (kind == "binary") {
    cfg.kind = DatasetKind::binary;
  } else if (kind == "blobs") {
    cfg.kind = DatasetKind::blobs;
  } else {
    throw invalid_parameter_error("dataset.kind must be csv, binary or blobs");
  }
  if (cfg.kind == DatasetKind::blobs) {
    if (const json* b = find(j, "blobs")) {
      reject_unknown_keys(*b, {"clusters", "points_per_cluster", "stddev"},
                          "dataset.blobs");
      if (const json* v = find(*b, "clusters")) cfg.blobs.clusters = v->get<int>();
      if (const json* v = find(*b, "points_per_cluster")) {
        cfg.blobs.points_per_cluster = v->get<int>();
      }
      if (const json* v = find(*b, "stddev")) cfg.blobs.stddev = v->get<double>();
    }
    if (const json* v = find(j, "blobs_seed")) cfg.blobs_seed = v->get<std::uint64_t>();
  } else {
    cfg.path = j.at("path").get<std::string>();
    if (const json* v = find(j, "label_column"); v && !v->is_null()) {
      cfg.label_column = v->get<int>();
    }
  }
  return cfg;
}

KernelSpec parse_kernel(const json& j) {
  if (!j.is_object()) throw invalid_parameter_error("kernel must be an object");
  reject_unknown_keys(j, {"kind", "k_neighbors", "scale"}, "kernel");
  KernelSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") {
    spec.kind = KernelKind::gaussian;
  } else if (kind == "cosine") {
    spec.kind = KernelKind::cosine_local;
  } else {
    throw invalid_parameter_error("kernel.kind must be gaussian or cosine");
  }
  spec.k_neighbors = j.at("k_neighbors").get<std::size_t>();
  if (const json* s = find(j, "scale")) {
    reject_unknown_keys(*s, {"mode", "sigma", "rank"}, "kernel.scale");
    const std::string mode = s->at("mode").get<std::string>();
    if (mode == "global") {
      spec.scale_mode = ScaleMode::global;
      spec.sigma = s->at("sigma").get<double>();
    } else if (mode == "local") {
      spec.scale_mode = ScaleMode::local_rank;
      if (const json* r = find(*s, "rank")) spec.rank = r->get<std::size_t>();
    } else {
      throw invalid_parameter_error("kernel.scale.mode must be global or local");
    }
  }
  return spec;
}

BoundsConfig parse_bounds(const json& j) {
  reject_unknown_keys(j, {"mode", "slack"}, "bounds");
  BoundsConfig cfg;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "exact") {
    cfg.mode = BoundsMode::exact;
  } else if (mode == "flexible") {
    cfg.mode = BoundsMode::flexible;
    cfg.slack = j.at("slack").get<double>();
  } else if (mode == "none") {
    cfg.mode = BoundsMode::none;
  } else {
    throw invalid_parameter_error("bounds.mode must be exact, flexible or none");
  }
  return cfg;
}

ConcaveConfig parse_concave(const json& j) {
  reject_unknown_keys(j, {"kind", "gamma", "linear_path"}, "concave");
  ConcaveConfig cfg;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") {
    cfg.kind = ConcaveKind::none;
  } else if (kind == "poisson") {
    cfg.kind = ConcaveKind::poisson;
    if (const json* g = find(j, "gamma")) cfg.gamma = g->get<double>();
  } else if (kind == "linear") {
    cfg.kind = ConcaveKind::linear;
    cfg.linear_path = j.at("linear_path").get<std::string>();
  } else {
    throw invalid_parameter_error("concave.kind must be none, poisson or linear");
  }
  return cfg;
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw invalid_parameter_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw invalid_parameter_error("config must be a JSON object");
  reject_unknown_keys(j,
                      {"dataset", "kernel", "bounds", "concave", "schedule", "steps",
                       "diffusion_steps", "budget", "acquisition", "seeds", "output"},
                      "config");
  ExperimentConfig cfg;
  try {
    cfg.dataset = parse_dataset(j.at("dataset"));
    if (const json* k = find(j, "kernel")) cfg.kernel = parse_kernel(*k);
    if (const json* b = find(j, "bounds")) cfg.bounds = parse_bounds(*b);
    if (const json* c = find(j, "concave")) cfg.concave = parse_concave(*c);
    if (const json* s = find(j, "schedule")) {
      reject_unknown_keys(*s, {"epsilon0", "epsilon_min", "alpha"}, "schedule");
      if (const json* v = find(*s, "epsilon0")) cfg.schedule.epsilon0 = v->get<double>();
      if (const json* v = find(*s, "epsilon_min")) {
        cfg.schedule.epsilon_min = v->get<double>();
      }
      if (const json* v = find(*s, "alpha")) cfg.schedule.alpha = v->get<double>();
    }
    if (const json* v = find(j, "steps")) cfg.steps = v->get<int>();
    if (const json* v = find(j, "diffusion_steps")) cfg.diffusion_steps = v->get<int>();
    const json& budget = j.at("budget");
    reject_unknown_keys(budget, {"initial_per_class", "total"}, "budget");
    cfg.budget.initial_per_class = budget.at("initial_per_class").get<int>();
    cfg.budget.total = budget.at("total").get<int>();
    const std::string acq = j.at("acquisition").get<std::string>();
    if (acq == "malady") {
      cfg.acquisition = Acquisition::malady;
    } else if (acq == "random") {
      cfg.acquisition = Acquisition::random;
    } else {
      throw invalid_parameter_error("acquisition must be malady or random");
    }
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.output = j.at("output").get<std::string>();
  } catch (const json::exception& e) {
    throw invalid_parameter_error(std::string("malformed config: ") + e.what());
  }
  if (cfg.seeds.empty()) throw invalid_parameter_error("seeds must be nonempty");
  if (cfg.steps < 0) throw invalid_parameter_error("steps must be nonnegative");
  if (cfg.diffusion_steps < 0) {
    throw invalid_parameter_error("diffusion_steps must be nonnegative");
  }
  cfg.schedule.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& config) {
  json j;
  json ds;
  switch (config.dataset.kind) {
    case DatasetKind::csv:
      ds["kind"] = "csv";
      break;
    case DatasetKind::binary:
      ds["kind"] = "binary";
      break;
    case DatasetKind::blobs:
      ds["kind"] = "blobs";
      break;
  }
  if (config.dataset.kind == DatasetKind::blobs) {
    ds["blobs"] = {{"clusters", config.dataset.blobs.clusters},
                   {"points_per_cluster", config.dataset.blobs.points_per_cluster},
                   {"stddev", config.dataset.blobs.stddev}};
    ds["blobs_seed"] = config.dataset.blobs_seed;
  } else {
    ds["path"] = config.dataset.path;
    if (config.dataset.label_column) ds["label_column"] = *config.dataset.label_column;
  }
  j["dataset"] = ds;
  json scale;
  if (config.kernel.scale_mode == ScaleMode::global) {
    scale = {{"mode", "global"}, {"sigma", config.kernel.sigma}};
  } else {
    scale = {{"mode", "local"}, {"rank", config.kernel.rank}};
  }
  j["kernel"] = {{"kind", config.kernel.kind == KernelKind::gaussian ? "gaussian"
                                                                     : "cosine"},
                 {"k_neighbors", config.kernel.k_neighbors},
                 {"scale", scale}};
  json bounds;
  switch (config.bounds.mode) {
    case BoundsMode::exact:
      bounds = {{"mode", "exact"}};
      break;
    case BoundsMode::flexible:
      bounds = {{"mode", "flexible"}, {"slack", config.bounds.slack}};
      break;
    case BoundsMode::none:
      bounds = {{"mode", "none"}};
      break;
  }
  j["bounds"] = bounds;
  json concave;
  switch (config.concave.kind) {
    case ConcaveKind::none:
      concave = {{"kind", "none"}};
      break;
    case ConcaveKind::poisson:
      concave = {{"kind", "poisson"}, {"gamma", config.concave.gamma}};
      break;
    case ConcaveKind::linear:
      concave = {{"kind", "linear"}, {"linear_path", config.concave.linear_path}};
      break;
  }
  j["concave"] = concave;
  j["schedule"] = {{"epsilon0", config.schedule.epsilon0},
                   {"epsilon_min", config.schedule.epsilon_min},
                   {"alpha", config.schedule.alpha}};
  j["steps"] = config.steps;
  j["diffusion_steps"] = config.diffusion_steps;
  j["budget"] = {{"initial_per_class", config.budget.initial_per_class},
                 {"total", config.budget.total}};
  j["acquisition"] = config.acquisition == Acquisition::malady ? "malady" : "random";
  j["seeds"] = config.seeds;
  j["output"] = config.output;
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string canonical = config_to_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_run_record_csv(const RunRecord& record, std::ostream& out) {
  out << "seed,iteration,num_labeled,query_index,accuracy\n";
  for (const QueryRow& row : record.rows) {
    out << record.seed << ',' << row.iteration << ',' << row.num_labeled << ','
        << row.query_index << ',' << fmt_double(row.accuracy) << '\n';
  }
}

ExperimentSummary run_experiment(const ExperimentConfig& config, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();

  Dataset data;
  switch (config.dataset.kind) {
    case DatasetKind::csv:
      data = load_dataset(config.dataset.path, FileFormat::csv,
                          config.dataset.label_column);
      break;
    case DatasetKind::binary:
      data = load_dataset(config.dataset.path, FileFormat::binary,
                          config.dataset.label_column);
      break;
    case DatasetKind::blobs:
      data = generate_blobs(config.dataset.blobs, config.dataset.blobs_seed);
      break;
  }
  if (data.labels.empty()) {
    throw invalid_parameter_error("active learning requires a labeled dataset");
  }

  if (log) *log << "building graph over " << data.features.rows << " points\n";
  const SparseGraph graph = build_graph(data.features, config.kernel);

  OracleLabels oracle{data.labels, data.n_classes()};
  ClassBoundsSpec bounds_spec;
  bounds_spec.mode = config.bounds.mode;
  bounds_spec.slack = config.bounds.slack;
  if (bounds_spec.mode != BoundsMode::none) bounds_spec.true_sizes = oracle.true_sizes();

  ConcaveTermSpec concave_spec;
  concave_spec.kind = config.concave.kind;
  concave_spec.gamma = config.concave.gamma;
  if (concave_spec.kind == ConcaveKind::linear) {
    const Dataset R = load_dataset(config.concave.linear_path, FileFormat::csv,
                                   std::nullopt);
    concave_spec.linear = R.features;
  }

  ExperimentSummary summary;
  summary.hash = config_hash(config);
  const std::filesystem::path out_dir =
      std::filesystem::path(config.output) / summary.hash;
  std::filesystem::create_directories(out_dir);
  summary.out_dir = out_dir.string();

  summary.outcomes.resize(config.seeds.size());
  std::atomic<std::size_t> next{0};
  const std::size_t n_workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()),
                            config.seeds.size());
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < config.seeds.size();
         i = next.fetch_add(1)) {
      SeedOutcome& outcome = summary.outcomes[i];
      outcome.seed = config.seeds[i];
      try {
        outcome.record = active_learning_loop(
            config.acquisition, graph, oracle, config.budget, bounds_spec,
            concave_spec, config.schedule, config.steps, config.seeds[i],
            config.diffusion_steps);
        outcome.ok = true;
        std::ofstream out(out_dir /
                          ("seed-" + std::to_string(config.seeds[i]) + ".csv"));
        write_run_record_csv(outcome.record, out);
      } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = e.what();
      }
    }
  };
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Mean/std curve over the seeds that completed; rows line up across seeds
  // because every run shares the same initial labeled-set size and budget.
  std::vector<const RunRecord*> done;
  for (const SeedOutcome& o : summary.outcomes) {
    if (o.ok) done.push_back(&o.record);
  }
  if (!done.empty()) {
    const std::size_t n_rows = done.front()->rows.size();
    for (std::size_t r = 0; r < n_rows; ++r) {
      double mean = 0.0;
      for (const RunRecord* rec : done) mean += rec->rows[r].accuracy;
      mean /= static_cast<double>(done.size());
      double var = 0.0;
      for (const RunRecord* rec : done) {
        const double dev = rec->rows[r].accuracy - mean;
        var += dev * dev;
      }
      const double sd = done.size() > 1
                            ? std::sqrt(var / static_cast<double>(done.size() - 1))
                            : 0.0;
      summary.curve_num_labeled.push_back(done.front()->rows[r].num_labeled);
      summary.curve_mean.push_back(mean);
      summary.curve_std.push_back(sd);
    }
    summary.final_mean = summary.curve_mean.back();
    summary.final_std = summary.curve_std.back();
  }

  {
    std::ofstream out(out_dir / "curve.csv");
    out << "num_labeled,mean_accuracy,std_accuracy\n";
    for (std::size_t r = 0; r < summary.curve_num_labeled.size(); ++r) {
      out << summary.curve_num_labeled[r] << ',' << fmt_double(summary.curve_mean[r])
          << ',' << fmt_double(summary.curve_std[r]) << '\n';
    }
  }

  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    json agg;
    agg["config"] = json::parse(config_to_json(config));
    agg["config_hash"] = summary.hash;
    json curve = json::array();
    for (std::size_t r = 0; r < summary.curve_num_labeled.size(); ++r) {
      curve.push_back({{"num_labeled", summary.curve_num_labeled[r]},
                       {"mean_accuracy", summary.curve_mean[r]},
                       {"std_accuracy", summary.curve_std[r]}});
    }
    agg["curve"] = curve;
    json per_seed = json::array();
    json failures = json::array();
    for (const SeedOutcome& o : summary.outcomes) {
      if (o.ok) {
        per_seed.push_back({{"seed", o.seed},
                            {"final_accuracy", o.record.final_accuracy},
                            {"eval_exhausted", o.record.eval_exhausted}});
      } else {
        failures.push_back({{"seed", o.seed}, {"error", o.error}});
      }
    }
    agg["final_accuracy"] = {{"mean", summary.final_mean},
                             {"std", summary.final_std},
                             {"per_seed", per_seed}};
    agg["failures"] = failures;
    // Timing lives only here so the CSV outputs stay byte-reproducible.
    agg["metadata"] = {
        {"wall_seconds", summary.wall_seconds},
        {"finished_at_unix",
         std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
             .count()}};
    std::ofstream out(out_dir / "aggregate.json");
    out << agg.dump(2) << '\n';
  }

  if (log) {
    *log << "experiment " << summary.hash << ": " << done.size() << '/'
         << config.seeds.size() << " seeds ok, final mean accuracy "
         << summary.final_mean << '\n';
  }
  return summary;
}

}  // namespace malady
