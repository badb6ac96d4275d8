// Command-line front end: dataset generation, training, evaluation,
// parameter counting, and the stability/transfer experiments. Every
// subcommand resolves its full configuration (CLI > config file > defaults),
// derives all randomness from one root seed, and writes a manifest with the
// resolved configuration plus hashes of every artifact it produced.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chebnet/checkpoint.hpp"
#include "chebnet/data.hpp"
#include "chebnet/dataset_io.hpp"
#include "chebnet/rng.hpp"
#include "chebnet/training.hpp"
#include "chebnet/transfer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace chebnet;

namespace {

constexpr const char* kManifestSchema = "chebnet.manifest.v1";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hash_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash missing file: " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  char out[20];
  std::snprintf(out, sizeof out, "%016llx",
                static_cast<unsigned long long>(fnv1a64(buf.str())));
  return out;
}

void write_manifest(const fs::path& out_dir, const std::string& command, const json& config,
                    const std::vector<fs::path>& outputs) {
  json m;
  m["schema"] = kManifestSchema;
  m["command"] = command;
  m["config"] = config;
  json arts = json::array();
  for (const fs::path& p : outputs) {
    json a;
    a["file"] = p.filename().string();
    a["fnv1a64"] = hash_file(p);
    a["bytes"] = fs::file_size(p);
    arts.push_back(std::move(a));
  }
  m["outputs"] = std::move(arts);
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  out << m.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed to write manifest");
}

struct Preset {
  std::string arch;
  std::size_t k;
  TaskKind task;
};

Preset lookup_preset(const std::string& name) {
  if (name == "cluster")
    return {"7 -E70 -ChN70 -ChN70 -ChN70 -ChN70 -MP70 -L35 -L17 -L6", 5,
            TaskKind::node_classification};
  if (name == "pattern")
    return {"3 -E70 -ChN70 -ChN70 -ChN70 -ChN70 -MP70 -L35 -L17 -L2", 5,
            TaskKind::node_classification};
  if (name == "zinc")
    return {"28 -E106 -ChN106 -ChN106 -ChN106 -ChN106 -MP106 -L53 -L26 -L1 (No-RC)", 2,
            TaskKind::graph_regression};
  if (name == "gcn-cluster")
    return {"7 -E146 -GCN146 -GCN146 -GCN146 -GCN146 -MP146 -L73 -L36 -L6", 1,
            TaskKind::node_classification};
  throw CLI::ValidationError("--preset", "unknown preset '" + name + "'");
}

// ---- shared option bundles ----

struct SbmOptionValues {
  std::size_t communities = 6;
  std::size_t size_min = 5;
  std::size_t size_max = 35;
  double p = 0.55;
  double q = 0.25;
  std::size_t seeds_per_community = 1;
};

void add_sbm_options(CLI::App* cmd, SbmOptionValues& v) {
  cmd->add_option("--communities", v.communities, "Number of SBM communities");
  cmd->add_option("--size-min", v.size_min, "Minimum community size");
  cmd->add_option("--size-max", v.size_max, "Maximum community size");
  cmd->add_option("--p", v.p, "Intra-community edge probability");
  cmd->add_option("--q", v.q, "Inter-community edge probability");
  cmd->add_option("--seeds-per-community", v.seeds_per_community,
                  "Labeled seed nodes revealed per community");
}

SbmConfig to_sbm_config(const SbmOptionValues& v, std::uint64_t seed) {
  SbmConfig cfg;
  cfg.n_communities = v.communities;
  cfg.size_min = v.size_min;
  cfg.size_max = v.size_max;
  cfg.p = v.p;
  cfg.q = v.q;
  cfg.seeds_per_community = v.seeds_per_community;
  cfg.seed = seed;
  return cfg;
}

struct TrainOptionValues {
  std::size_t batch_size = 128;
  double lr0 = 1e-3;
  double plateau_factor = 0.5;
  int patience = 5;
  double min_lr = 1e-5;
  int max_epochs = 100;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4};
};

void add_train_options(CLI::App* cmd, TrainOptionValues& v) {
  cmd->add_option("--batch-size", v.batch_size, "Graphs per mini-batch");
  cmd->add_option("--lr", v.lr0, "Initial Adam learning rate");
  cmd->add_option("--plateau-factor", v.plateau_factor, "LR reduction factor on plateau");
  cmd->add_option("--patience", v.patience, "Epochs without improvement before reducing");
  cmd->add_option("--min-lr", v.min_lr, "Stop once the LR falls below this");
  cmd->add_option("--max-epochs", v.max_epochs, "Epoch budget per seed");
  cmd->add_option("--seeds", v.seeds, "Run seeds (one training run each)")->delimiter(',');
}

TrainConfig to_train_config(const TrainOptionValues& v) {
  TrainConfig cfg;
  cfg.batch_size = v.batch_size;
  cfg.lr0 = v.lr0;
  cfg.plateau_factor = v.plateau_factor;
  cfg.plateau_patience = v.patience;
  cfg.min_lr = v.min_lr;
  cfg.max_epochs = v.max_epochs;
  cfg.seeds = v.seeds;
  return cfg;
}

json train_config_json(const TrainOptionValues& v) {
  json j;
  j["batch_size"] = v.batch_size;
  j["lr0"] = v.lr0;
  j["plateau_factor"] = v.plateau_factor;
  j["patience"] = v.patience;
  j["min_lr"] = v.min_lr;
  j["max_epochs"] = v.max_epochs;
  j["seeds"] = v.seeds;
  return j;
}

ModelSpec resolve_spec(const std::string& preset, std::string arch, std::size_t k,
                       std::string task_name, const Dataset* ds) {
  TaskKind task = ds ? ds->task : TaskKind::node_classification;
  if (!preset.empty()) {
    const Preset p = lookup_preset(preset);
    if (arch.empty()) arch = p.arch;
    if (k == 0) k = p.k;
    task = p.task;
  }
  if (!task_name.empty()) task = task_from_string(task_name);
  if (arch.empty()) throw CLI::ValidationError("--arch", "no architecture given (or --preset)");
  if (k == 0) k = 1;
  if (ds && task != ds->task)
    throw std::invalid_argument("architecture task '" + to_string(task) +
                                "' does not match dataset task '" + to_string(ds->task) + "'");
  return parse_model_spec(arch, task, k);
}

void write_seed_csv(const fs::path& path, const SeedRun& run) {
  std::ofstream out(path, std::ios::binary);
  out << "epoch,lr,train_loss,val_metric,test_metric\n";
  for (const EpochRow& row : run.log)
    out << row.epoch << "," << format_double(row.lr) << "," << format_double(row.train_loss)
        << "," << format_double(row.val_metric) << "," << format_double(row.test_metric) << "\n";
  if (!out) throw std::runtime_error("failed to write " + path.string());
}

json report_json(const MetricReport& r) {
  json j;
  j["metric"] = r.name;
  j["per_seed"] = r.per_seed;
  j["mean"] = r.mean;
  j["stddev"] = r.stddev;
  return j;
}

// ---- subcommand implementations ----

int cmd_generate(const std::string& task, std::size_t n_graphs, const SbmOptionValues& sbm,
                 std::size_t pattern_size, std::size_t n_patterns, double attach_prob,
                 double split_train, double split_val, double split_test, std::uint64_t seed,
                 const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Dataset ds;
  if (task == "cluster") {
    ds = gen_cluster_like(to_sbm_config(sbm, seed), n_graphs);
  } else if (task == "pattern") {
    PatternConfig cfg;
    cfg.pattern_size = pattern_size;
    cfg.n_patterns = n_patterns;
    cfg.attach_prob = attach_prob;
    cfg.host = to_sbm_config(sbm, 0);
    cfg.seed = seed;
    ds = gen_pattern_like(cfg, n_graphs);
  } else {
    throw std::invalid_argument("unknown generation task '" + task + "'");
  }
  split_dataset(ds, split_train, split_val, split_test, derive_seed(seed, 0x517));

  const fs::path data_path = out_dir / "dataset.jsonl";
  save_dataset(data_path.string(), ds);

  json cfg;
  cfg["task"] = task;
  cfg["n_graphs"] = n_graphs;
  cfg["communities"] = sbm.communities;
  cfg["size_min"] = sbm.size_min;
  cfg["size_max"] = sbm.size_max;
  cfg["p"] = sbm.p;
  cfg["q"] = sbm.q;
  cfg["seeds_per_community"] = sbm.seeds_per_community;
  if (task == "pattern") {
    cfg["pattern_size"] = pattern_size;
    cfg["n_patterns"] = n_patterns;
    cfg["attach_prob"] = attach_prob;
  }
  cfg["split"] = {split_train, split_val, split_test};
  cfg["seed"] = seed;
  write_manifest(out_dir, "generate", cfg, {data_path});

  std::cout << "wrote " << ds.graphs.size() << " graphs (vocab " << ds.vocab << ") to "
            << data_path.string() << "\n";
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& preset, const std::string& arch,
              std::size_t k, const std::string& task_name, const TrainOptionValues& topt,
              const fs::path& out_dir) {
  const Dataset ds = load_dataset(data_path);
  const ModelSpec spec = resolve_spec(preset, arch, k, task_name, &ds);
  const TrainConfig tcfg = to_train_config(topt);

  const TrainResult result = train(spec, ds, tcfg);

  fs::create_directories(out_dir);
  std::vector<fs::path> outputs;
  json summary;
  summary["schema"] = "chebnet.summary.v1";
  summary["arch"] = spec.arch;
  summary["k"] = spec.k;
  summary["task"] = to_string(spec.task);
  summary["param_count"] = param_count(spec);
  summary["report"] = report_json(result.report);
  json runs = json::array();

  for (const SeedRun& run : result.runs) {
    const fs::path log_path = out_dir / ("log_seed" + std::to_string(run.seed) + ".csv");
    write_seed_csv(log_path, run);
    outputs.push_back(log_path);

    json rj;
    rj["seed"] = run.seed;
    rj["diverged"] = run.diverged;
    if (run.diverged) {
      rj["diagnostic"] = run.diagnostic;
    } else {
      rj["best_epoch"] = run.best_epoch;
      rj["best_val"] = run.best_val;
      rj["test_metric"] = run.test_metric;
      Model model = build_model(spec, run.seed);
      model.params = run.best_params;
      model.buffers = run.best_buffers;
      const fs::path ckpt = out_dir / ("checkpoint_seed" + std::to_string(run.seed) + ".ckpt");
      save_checkpoint(ckpt.string(), model, {run.seed, run.best_epoch});
      outputs.push_back(ckpt);
    }
    runs.push_back(std::move(rj));
  }
  summary["runs"] = std::move(runs);

  const fs::path summary_path = out_dir / "summary.json";
  {
    std::ofstream out(summary_path, std::ios::binary);
    out << summary.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed to write summary");
  }
  outputs.push_back(summary_path);

  json cfg;
  cfg["data"] = data_path;
  cfg["arch"] = spec.arch;
  cfg["k"] = spec.k;
  cfg["task"] = to_string(spec.task);
  cfg["train"] = train_config_json(topt);
  write_manifest(out_dir, "train", cfg, outputs);

  std::cout << result.report.name << ": mean " << format_double(result.report.mean) << " +/- "
            << format_double(result.report.stddev) << " over " << result.report.per_seed.size()
            << " seeds\n";
  for (const SeedRun& run : result.runs)
    if (run.diverged)
      std::cout << "seed " << run.seed << " diverged: " << run.diagnostic << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& split, const fs::path& out_dir) {
  LoadedCheckpoint lc = load_checkpoint(checkpoint_path);
  const Dataset ds = load_dataset(data_path);
  if (lc.model.spec.task != ds.task)
    throw std::invalid_argument("checkpoint task does not match dataset task");
  if (lc.model.embedding && lc.model.embedding->vocab != ds.vocab)
    throw std::invalid_argument("checkpoint vocabulary (" +
                                std::to_string(lc.model.embedding->vocab) +
                                ") does not match dataset vocabulary (" +
                                std::to_string(ds.vocab) + ")");

  std::vector<std::size_t> indices;
  if (split == "train") indices = ds.splits.train;
  else if (split == "val") indices = ds.splits.val;
  else if (split == "test") indices = ds.splits.test;
  else if (split == "all") {
    indices.resize(ds.graphs.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  } else {
    throw std::invalid_argument("unknown split '" + split + "'");
  }

  const double value = evaluate(lc.model, ds, indices);
  const std::string metric = metric_name_for(ds.task);
  std::cout << metric << " (" << split << "): " << format_double(value) << "\n";

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    json rj;
    rj["schema"] = "chebnet.eval.v1";
    rj["metric"] = metric;
    rj["split"] = split;
    rj["value"] = value;
    rj["n_graphs"] = indices.size();
    const fs::path p = out_dir / "eval.json";
    std::ofstream out(p, std::ios::binary);
    out << rj.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed to write eval report");
    json cfg;
    cfg["checkpoint"] = checkpoint_path;
    cfg["data"] = data_path;
    cfg["split"] = split;
    write_manifest(out_dir, "eval", cfg, {p});
  }
  return 0;
}

int cmd_params(const std::string& preset, const std::string& arch, std::size_t k,
               const std::string& task_name) {
  const ModelSpec spec = resolve_spec(preset, arch, k, task_name, nullptr);
  std::cout << param_count(spec) << "\n";
  return 0;
}

int cmd_stability(const SbmOptionValues& sbm, std::uint64_t graph_seed,
                  const std::string& coeffs_kind, std::size_t filter_k,
                  std::uint64_t filter_seed, std::vector<double> eps, std::size_t trials,
                  const std::string& kind_name, int iters, double tol, std::uint64_t seed,
                  const fs::path& out_dir) {
  const Dataset one = gen_cluster_like(to_sbm_config(sbm, graph_seed), 1);
  const SparseMatrix lap = normalized_laplacian(one.graphs[0]);

  ChebCoeffs coeffs;
  if (coeffs_kind == "linear") {
    coeffs.theta = {0.0, 1.0};
  } else if (coeffs_kind == "random") {
    Rng rng(filter_seed);
    coeffs.theta.resize(filter_k + 1);
    for (auto& t : coeffs.theta) t = rng.normal();
  } else {
    throw std::invalid_argument("unknown coefficient kind '" + coeffs_kind + "'");
  }

  PowerIterOptions opts;
  opts.max_iters = iters;
  opts.rel_tol = tol;
  const StabilityReport rep = stability_sweep(lap, coeffs, eps, trials, seed,
                                              perturb_kind_from_string(kind_name), opts);

  fs::create_directories(out_dir);
  const fs::path csv_path = out_dir / "sweep.csv";
  {
    std::ofstream out(csv_path, std::ios::binary);
    out << rep.to_csv();
    if (!out) throw std::runtime_error("failed to write sweep");
  }

  json cfg;
  cfg["communities"] = sbm.communities;
  cfg["size_min"] = sbm.size_min;
  cfg["size_max"] = sbm.size_max;
  cfg["p"] = sbm.p;
  cfg["q"] = sbm.q;
  cfg["graph_seed"] = graph_seed;
  cfg["coeffs"] = coeffs_kind;
  cfg["filter_k"] = filter_k;
  cfg["filter_seed"] = filter_seed;
  cfg["eps"] = eps;
  cfg["trials"] = trials;
  cfg["kind"] = kind_name;
  cfg["iters"] = iters;
  cfg["tol"] = tol;
  cfg["seed"] = seed;
  write_manifest(out_dir, "stability", cfg, {csv_path});

  if (rep.slope_defined)
    std::cout << "slope " << format_double(rep.slope) << "  r2 " << format_double(rep.r2)
              << (rep.all_converged ? "" : "  [warning: some estimates did not converge]")
              << "\n";
  else
    std::cout << "slope undefined (single epsilon)\n";
  return 0;
}

int cmd_transfer(const SbmOptionValues& sbm, std::size_t small_min, std::size_t small_max,
                 std::size_t large_min, std::size_t large_max, std::uint64_t data_seed,
                 const std::string& preset, const std::string& arch, std::size_t k,
                 const TrainOptionValues& topt, std::size_t n_train, std::size_t n_val,
                 std::size_t n_test, std::size_t n_eval, const fs::path& out_dir) {
  SbmOptionValues small_v = sbm;
  small_v.size_min = small_min;
  small_v.size_max = small_max;
  SbmOptionValues large_v = sbm;
  large_v.size_min = large_min;
  large_v.size_max = large_max;

  const ModelSpec spec = resolve_spec(preset, arch, k, "node_classification", nullptr);
  const TrainConfig tcfg = to_train_config(topt);
  TransferProtocol proto;
  proto.n_train = n_train;
  proto.n_val = n_val;
  proto.n_test = n_test;
  proto.n_eval_large = n_eval;

  const TransferResult result = size_transfer(to_sbm_config(small_v, data_seed),
                                              to_sbm_config(large_v, data_seed), spec, tcfg,
                                              proto);

  fs::create_directories(out_dir);
  std::vector<fs::path> outputs;
  for (const SeedRun& run : result.training.runs) {
    const fs::path log_path = out_dir / ("log_seed" + std::to_string(run.seed) + ".csv");
    write_seed_csv(log_path, run);
    outputs.push_back(log_path);
  }

  json rj;
  rj["schema"] = "chebnet.transfer.v1";
  rj["arch"] = spec.arch;
  rj["k"] = spec.k;
  rj["param_count"] = param_count(spec);
  rj["small_test"] = report_json(result.small_test);
  rj["large_eval"] = report_json(result.large_eval);
  rj["gap"] = result.gap;
  const fs::path report_path = out_dir / "transfer.json";
  {
    std::ofstream out(report_path, std::ios::binary);
    out << rj.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed to write transfer report");
  }
  outputs.push_back(report_path);

  json cfg;
  cfg["communities"] = sbm.communities;
  cfg["p"] = sbm.p;
  cfg["q"] = sbm.q;
  cfg["small_size"] = {small_min, small_max};
  cfg["large_size"] = {large_min, large_max};
  cfg["data_seed"] = data_seed;
  cfg["arch"] = spec.arch;
  cfg["k"] = spec.k;
  cfg["train"] = train_config_json(topt);
  cfg["protocol"] = {{"n_train", n_train}, {"n_val", n_val}, {"n_test", n_test},
                     {"n_eval_large", n_eval}};
  write_manifest(out_dir, "transfer", cfg, outputs);

  std::cout << "small-test " << format_double(result.small_test.mean) << " +/- "
            << format_double(result.small_test.stddev) << ", large-eval "
            << format_double(result.large_eval.mean) << " +/- "
            << format_double(result.large_eval.stddev) << ", gap "
            << format_double(result.gap) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ChebNet: spectral graph convolution library and benchmark harness"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a config file ([subcommand] sections)");

  // generate
  auto* generate = app.add_subcommand("generate", "Generate a synthetic graph dataset");
  std::string gen_task = "cluster";
  std::size_t gen_n = 100, pattern_size = 20, n_patterns = 100;
  double attach_prob = -1.0;
  double split_train = 0.8, split_val = 0.1, split_test = 0.1;
  std::uint64_t gen_seed = 42;
  std::string gen_out;
  SbmOptionValues gen_sbm;
  generate->add_option("--task", gen_task, "cluster | pattern")->default_str("cluster");
  generate->add_option("--n-graphs", gen_n, "Number of graphs");
  add_sbm_options(generate, gen_sbm);
  generate->add_option("--pattern-size", pattern_size, "Nodes per pattern (pattern task)");
  generate->add_option("--n-patterns", n_patterns, "Distinct patterns (pattern task)");
  generate->add_option("--attach-prob", attach_prob, "Pattern attach probability (default q/2)");
  generate->add_option("--split-train", split_train, "Train fraction");
  generate->add_option("--split-val", split_val, "Validation fraction");
  generate->add_option("--split-test", split_test, "Test fraction");
  generate->add_option("--seed", gen_seed, "Root seed");
  generate->add_option("--out", gen_out, "Output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model over all seeds");
  std::string tr_data, tr_preset, tr_arch, tr_task, tr_out;
  std::size_t tr_k = 0;
  TrainOptionValues tr_opt;
  train_cmd->add_option("--data", tr_data, "Dataset file")->required();
  train_cmd->add_option("--preset", tr_preset, "cluster | pattern | zinc | gcn-cluster");
  train_cmd->add_option("--arch", tr_arch, "Architecture string");
  train_cmd->add_option("--k", tr_k, "Chebyshev basis terms per ChN layer");
  train_cmd->add_option("--task", tr_task, "Override task kind");
  add_train_options(train_cmd, tr_opt);
  train_cmd->add_option("--out", tr_out, "Output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a frozen checkpoint");
  std::string ev_ckpt, ev_data, ev_split = "test", ev_out;
  eval_cmd->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--data", ev_data, "Dataset file")->required();
  eval_cmd->add_option("--split", ev_split, "train | val | test | all");
  eval_cmd->add_option("--out", ev_out, "Optional output directory for the report");

  // params
  auto* params_cmd = app.add_subcommand("params", "Print the learnable parameter count");
  std::string pr_preset, pr_arch, pr_task;
  std::size_t pr_k = 0;
  params_cmd->add_option("--preset", pr_preset, "cluster | pattern | zinc | gcn-cluster");
  params_cmd->add_option("--arch", pr_arch, "Architecture string");
  params_cmd->add_option("--k", pr_k, "Chebyshev basis terms per ChN layer");
  params_cmd->add_option("--task", pr_task, "Task kind");

  // stability
  auto* stab_cmd = app.add_subcommand("stability", "Filter-stability sweep on one SBM graph");
  SbmOptionValues st_sbm;
  st_sbm.size_min = 14;
  st_sbm.size_max = 20;
  std::uint64_t st_graph_seed = 1, st_filter_seed = 2, st_seed = 3;
  std::string st_coeffs = "random", st_kind = "weight_noise", st_out;
  std::size_t st_filter_k = 5, st_trials = 3;
  std::vector<double> st_eps{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  int st_iters = 6000;
  double st_tol = 1e-8;
  add_sbm_options(stab_cmd, st_sbm);
  stab_cmd->add_option("--graph-seed", st_graph_seed, "Seed for the base graph");
  stab_cmd->add_option("--coeffs", st_coeffs, "linear | random");
  stab_cmd->add_option("--filter-k", st_filter_k, "Filter order for random coefficients");
  stab_cmd->add_option("--filter-seed", st_filter_seed, "Seed for random coefficients");
  stab_cmd->add_option("--eps", st_eps, "Perturbation magnitudes")->delimiter(',');
  stab_cmd->add_option("--trials", st_trials, "Trials per epsilon");
  stab_cmd->add_option("--kind", st_kind, "weight_noise | edge_toggle");
  stab_cmd->add_option("--iters", st_iters, "Power-iteration budget");
  stab_cmd->add_option("--tol", st_tol, "Power-iteration relative tolerance");
  stab_cmd->add_option("--seed", st_seed, "Root seed for the sweep");
  stab_cmd->add_option("--out", st_out, "Output directory")->required();

  // transfer
  auto* xfer_cmd = app.add_subcommand("transfer", "Size-transfer experiment");
  SbmOptionValues xf_sbm;
  std::size_t xf_small_min = 7, xf_small_max = 10, xf_large_min = 14, xf_large_max = 20;
  std::uint64_t xf_data_seed = 5;
  std::string xf_preset = "cluster", xf_arch, xf_out;
  std::size_t xf_k = 0;
  TrainOptionValues xf_opt;
  std::size_t xf_train = 120, xf_val = 24, xf_test = 24, xf_eval = 48;
  add_sbm_options(xfer_cmd, xf_sbm);
  xfer_cmd->add_option("--small-size-min", xf_small_min, "Community size min (training graphs)");
  xfer_cmd->add_option("--small-size-max", xf_small_max, "Community size max (training graphs)");
  xfer_cmd->add_option("--large-size-min", xf_large_min, "Community size min (eval graphs)");
  xfer_cmd->add_option("--large-size-max", xf_large_max, "Community size max (eval graphs)");
  xfer_cmd->add_option("--data-seed", xf_data_seed, "Seed for dataset generation");
  xfer_cmd->add_option("--preset", xf_preset, "Architecture preset");
  xfer_cmd->add_option("--arch", xf_arch, "Architecture string");
  xfer_cmd->add_option("--k", xf_k, "Chebyshev basis terms per ChN layer");
  add_train_options(xfer_cmd, xf_opt);
  xfer_cmd->add_option("--n-train", xf_train, "Training graphs");
  xfer_cmd->add_option("--n-val", xf_val, "Validation graphs");
  xfer_cmd->add_option("--n-test", xf_test, "Small test graphs");
  xfer_cmd->add_option("--n-eval", xf_eval, "Large evaluation graphs");
  xfer_cmd->add_option("--out", xf_out, "Output directory")->required();

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough(true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed())
      return cmd_generate(gen_task, gen_n, gen_sbm, pattern_size, n_patterns, attach_prob,
                          split_train, split_val, split_test, gen_seed, gen_out);
    if (train_cmd->parsed())
      return cmd_train(tr_data, tr_preset, tr_arch, tr_k, tr_task, tr_opt, tr_out);
    if (eval_cmd->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_split, ev_out);
    if (params_cmd->parsed()) return cmd_params(pr_preset, pr_arch, pr_k, pr_task);
    if (stab_cmd->parsed())
      return cmd_stability(st_sbm, st_graph_seed, st_coeffs, st_filter_k, st_filter_seed, st_eps,
                           st_trials, st_kind, st_iters, st_tol, st_seed, st_out);
    if (xfer_cmd->parsed())
      return cmd_transfer(xf_sbm, xf_small_min, xf_small_max, xf_large_min, xf_large_max,
                          xf_data_seed, xf_preset, xf_arch, xf_k, xf_opt, xf_train, xf_val,
                          xf_test, xf_eval, xf_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
