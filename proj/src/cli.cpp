#include "taskroute/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "taskroute/classifier.hpp"
#include "taskroute/dataset.hpp"
#include "taskroute/discovery.hpp"
#include "taskroute/inference.hpp"
#include "taskroute/router.hpp"
#include "taskroute/service.hpp"
#include "taskroute/synth.hpp"

namespace taskroute {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonPaths {
  std::string config_path;
  std::string pool_path;
  std::string discovery_path;
  std::string classifier_path;
  std::string router_path;
};

PipelineConfig resolve_config(const std::string& config_path,
                              std::optional<std::int64_t> seed_override) {
  PipelineConfig cfg;
  if (!config_path.empty()) cfg = load_config_file(config_path);
  if (seed_override) cfg.seed = *seed_override;
  cfg.validate();
  return cfg;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << text;
}

struct LoadedState {
  std::shared_ptr<const ServingState> state;
  std::map<std::string, std::string> checksums;
};

std::string crc_hex(const fs::path& path) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", file_crc32(path));
  return buf;
}

LoadedState load_state(const CommonPaths& paths,
                       std::optional<std::int64_t> seed_override) {
  const PipelineConfig cfg = resolve_config(paths.config_path, seed_override);
  Dataset pool_only;
  // The pool file alone defines the model set at serving time.
  {
    std::ifstream probe(paths.pool_path);
    if (!probe) throw Error("pool file not found: " + paths.pool_path);
  }
  // load_dataset requires records; parse the pool by reusing its loader on
  // an empty records stream is not possible, so read it directly here.
  std::vector<ModelCard> pool;
  {
    std::ifstream in(paths.pool_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("model_id") ||
          !j.contains("cost_per_query"))
        throw Error(paths.pool_path + ":" + std::to_string(lineno) +
                    ": expected {model_id, cost_per_query}");
      ModelCard card;
      card.model_id = j["model_id"].get<std::string>();
      card.cost_per_query = j["cost_per_query"].get<double>();
      card.index = static_cast<int>(pool.size());
      pool.push_back(std::move(card));
    }
  }
  auto discovery = load_artifact<DiscoveryResult>(paths.discovery_path);
  auto classifier = load_artifact<ClassifierParams>(paths.classifier_path);
  auto router = load_artifact<RouterParams>(paths.router_path);

  LoadedState out;
  out.checksums["pool"] = crc_hex(paths.pool_path);
  out.checksums["discovery"] = crc_hex(paths.discovery_path);
  out.checksums["classifier"] = crc_hex(paths.classifier_path);
  out.checksums["router"] = crc_hex(paths.router_path);
  out.state = std::make_shared<ServingState>(cfg, std::move(pool), std::move(discovery),
                                             std::move(classifier), std::move(router));
  return out;
}

int run_synth(const std::string& out_dir, int models, int tasks, int prompts,
              int embed_dim, double separation, double quality_noise, int outliers,
              std::int64_t seed) {
  SynthSpec spec;
  spec.n_tasks = tasks;
  spec.prompts_per_task = prompts;
  spec.embed_dim = embed_dim;
  spec.center_separation = separation;
  spec.quality_noise = quality_noise;
  spec.outlier_count = outliers;
  spec.seed = static_cast<std::uint64_t>(seed);
  spec.affinity = default_affinity(tasks, models, spec.seed);

  auto [ds, truth] = generate(spec);
  fs::create_directories(out_dir);
  write_pool_file(ds.pool, (fs::path(out_dir) / "pool.jsonl").string());
  write_records_file(ds, (fs::path(out_dir) / "records.jsonl").string());
  const auto splits = split_dataset(ds, {0.8, 0.1, 0.1}, spec.seed);
  write_records_file(splits[0], (fs::path(out_dir) / "train.jsonl").string());
  write_records_file(splits[1], (fs::path(out_dir) / "dev.jsonl").string());
  write_records_file(splits[2], (fs::path(out_dir) / "test.jsonl").string());
  save_artifact(truth, fs::path(out_dir) / "truth.bin");
  std::cout << "wrote " << ds.records.size() << " records over " << models
            << " models to " << out_dir << "\n";
  return 0;
}

int run_discover(const std::string& data_path, const std::string& pool_path,
                 const std::string& out_dir, const std::string& config_path,
                 std::optional<std::int64_t> seed) {
  const PipelineConfig cfg = resolve_config(config_path, seed);
  const Dataset ds = load_dataset(data_path, pool_path);
  const DiscoveryResult result = iterative_cluster(ds, cfg);
  fs::create_directories(out_dir);
  save_artifact(result, fs::path(out_dir) / "discovery.bin");
  write_text_file(fs::path(out_dir) / "clusters.txt", cluster_report(result, ds));
  std::cout << "discovered " << result.cluster_count() << " task clusters ("
            << result.assignment.size() << " prompts)\n";
  return 0;
}

int run_train_classifier(const std::string& data_path, const std::string& pool_path,
                         const std::string& discovery_path, const std::string& out_dir,
                         const std::string& config_path,
                         std::optional<std::int64_t> seed, double lr, int epochs,
                         int batch_size) {
  const PipelineConfig cfg = resolve_config(config_path, seed);
  const Dataset ds = load_dataset(data_path, pool_path);
  const auto discovery = load_artifact<DiscoveryResult>(discovery_path);

  ClassifierParams params =
      init_classifier(discovery, ds.desc_dim(), ds.prompt_dim(),
                      static_cast<std::uint64_t>(cfg.seed));
  TrainSpec spec;
  spec.learning_rate = lr;
  spec.epochs = epochs;
  spec.batch_size = batch_size;
  spec.seed = mix_seed(static_cast<std::uint64_t>(cfg.seed), 0x7a5c);
  const TrainTrace trace = train_classifier(params, ds, discovery, spec);

  fs::create_directories(out_dir);
  save_artifact(params, fs::path(out_dir) / "classifier.bin");
  std::ostringstream report;
  report << "initial_bce=" << trace.initial_loss << "\n";
  for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e)
    report << "epoch " << e << " bce=" << trace.epoch_loss[e] << "\n";
  write_text_file(fs::path(out_dir) / "classifier_report.txt", report.str());
  std::cout << "classifier trained: bce " << trace.initial_loss << " -> "
            << (trace.epoch_loss.empty() ? trace.initial_loss : trace.epoch_loss.back())
            << "\n";
  return 0;
}

int run_train_router(const std::string& data_path, const std::string& pool_path,
                     const std::string& discovery_path,
                     const std::string& classifier_path, const std::string& out_dir,
                     const std::string& config_path, std::optional<std::int64_t> seed,
                     double lr, int base_epochs, int adapter_epochs, int batch_size) {
  const PipelineConfig cfg = resolve_config(config_path, seed);
  const Dataset ds = load_dataset(data_path, pool_path);
  const auto discovery = load_artifact<DiscoveryResult>(discovery_path);
  const auto clf = load_artifact<ClassifierParams>(classifier_path);

  RouterDims dims;
  dims.prompt_dim = ds.prompt_dim();
  dims.proj_dim = cfg.model_embed_dim;
  dims.embed_dim = cfg.model_embed_dim;
  dims.hidden_dim = cfg.adapter_hidden_dim;
  RouterParams params =
      init_router(ds.pool, discovery, dims, static_cast<std::uint64_t>(cfg.seed));

  TrainSpec base_spec;
  base_spec.learning_rate = lr;
  base_spec.epochs = base_epochs;
  base_spec.batch_size = batch_size;
  base_spec.seed = mix_seed(static_cast<std::uint64_t>(cfg.seed), 0xba5e0);
  const TrainTrace base_trace = train_base(params, ds, base_spec);

  TrainSpec adapter_spec = base_spec;
  adapter_spec.epochs = adapter_epochs;
  adapter_spec.seed = mix_seed(static_cast<std::uint64_t>(cfg.seed), 0xada0);
  const AdapterTrainReport report =
      train_task_adapters(params, ds, clf, cfg.classifier_threshold, adapter_spec);

  fs::create_directories(out_dir);
  save_artifact(params, fs::path(out_dir) / "router.bin");
  std::ostringstream text;
  text << "base mse " << base_trace.initial_loss << " -> "
       << (base_trace.epoch_loss.empty() ? base_trace.initial_loss
                                         : base_trace.epoch_loss.back())
       << "\n";
  for (std::size_t e = 0; e < base_trace.epoch_loss.size(); ++e)
    text << "base epoch " << e << " mse=" << base_trace.epoch_loss[e] << "\n";
  text << report.render();
  write_text_file(fs::path(out_dir) / "router_report.txt", text.str());
  std::cout << "router trained: " << params.general.size() << " general heads, "
            << params.task_adapters.size() << " task adapters\n";
  return 0;
}

int run_route(const CommonPaths& paths, const std::string& input_path,
              const std::string& out_path, double tolerance,
              std::optional<std::int64_t> seed) {
  const LoadedState loaded = load_state(paths, seed);
  std::ifstream in(input_path);
  if (!in) throw Error("input file not found: " + input_path);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error("cannot write decisions file: " + out_path);

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("prompt_embedding") ||
        !j["prompt_embedding"].is_array())
      throw Error(input_path + ":" + std::to_string(lineno) +
                  ": expected an object with a prompt_embedding array");
    Eigen::VectorXd embedding(static_cast<Eigen::Index>(j["prompt_embedding"].size()));
    Eigen::Index i = 0;
    for (const auto& x : j["prompt_embedding"]) {
      if (!x.is_number())
        throw Error(input_path + ":" + std::to_string(lineno) +
                    ": non-numeric embedding entry");
      embedding[i++] = x.get<double>();
    }
    const RoutingDecision d =
        route_with_tolerance(*loaded.state, embedding, tolerance);
    json rec;
    rec["prompt_id"] = j.contains("prompt_id") && j["prompt_id"].is_string()
                           ? j["prompt_id"].get<std::string>()
                           : ("line" + std::to_string(lineno));
    rec["model_id"] =
        loaded.state->pool[static_cast<std::size_t>(d.chosen_model)].model_id;
    rec["model_index"] = d.chosen_model;
    if (d.task_id >= 0)
      rec["task_id"] = d.task_id;
    else
      rec["task_id"] = nullptr;
    rec["final_scores"] = std::vector<double>(
        d.final_scores.data(), d.final_scores.data() + d.final_scores.size());
    rec["cost"] = d.cost;
    out << rec.dump() << "\n";
  }
  return 0;
}

int run_eval(const CommonPaths& paths, const std::string& data_path,
             const std::string& truth_path, const std::string& out_dir,
             std::optional<std::int64_t> seed, int grid_steps) {
  const LoadedState loaded = load_state(paths, seed);
  const Dataset ds = load_dataset(data_path, paths.pool_path);
  const auto truth = load_artifact<GroundTruth>(truth_path);
  if (ds.pool_size() != static_cast<int>(loaded.state->pool.size()))
    throw Error("eval: dataset pool does not match serving pool");

  const auto& state = *loaded.state;
  const Decider decider = [&state](const PromptRecord& rec) {
    return route(state, rec.prompt_embedding).chosen_model;
  };
  const RouterMetrics metrics = eval_router(decider, ds, truth);

  std::vector<double> grid;
  for (int i = 0; i <= grid_steps; ++i)
    grid.push_back(static_cast<double>(i) / static_cast<double>(grid_steps));
  const auto curve = cost_curve(state, ds, truth, grid);

  fs::create_directories(out_dir);
  write_text_file(fs::path(out_dir) / "metrics.csv", metrics_csv(metrics, ds.pool));
  write_text_file(fs::path(out_dir) / "cost_curve.csv", cost_curve_csv(curve));
  std::cout << "mean_quality=" << metrics.mean_quality
            << " oracle_quality=" << metrics.oracle_quality
            << " oracle_ratio=" << metrics.oracle_ratio
            << " mean_cost=" << metrics.mean_cost << "\n";
  return 0;
}

int run_serve(const CommonPaths& paths, const std::string& host, int port,
              std::optional<std::int64_t> seed) {
  const LoadedState loaded = load_state(paths, seed);
  RoutingService service(loaded.state, loaded.checksums);
  std::cout << "serving on " << host << ":" << port << "\n";
  const int rc = service.run(host, port);
  if (rc != 0) std::cerr << "failed to bind " << host << ":" << port << "\n";
  return rc;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Two-stage task-aware model routing pipeline"};
  app.require_subcommand(1);

  std::optional<std::int64_t> seed;
  app.add_option("--seed", seed, "Override the config seed");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted synthetic dataset");
  std::string synth_out;
  int synth_models = 6, synth_tasks = 3, synth_prompts = 20, synth_dim = 16,
      synth_outliers = 0;
  double synth_sep = 10.0, synth_noise = 0.02;
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--models", synth_models, "Model pool size");
  synth_cmd->add_option("--tasks", synth_tasks, "Number of planted tasks");
  synth_cmd->add_option("--prompts-per-task", synth_prompts, "Prompts per task");
  synth_cmd->add_option("--embed-dim", synth_dim, "Embedding dimension");
  synth_cmd->add_option("--separation", synth_sep, "Center separation");
  synth_cmd->add_option("--quality-noise", synth_noise, "Quality noise sigma");
  synth_cmd->add_option("--outliers", synth_outliers, "Outlier prompt count");

  // discover
  auto* discover_cmd = app.add_subcommand("discover", "Run stage-1 task discovery");
  std::string d_data, d_pool, d_out, d_config;
  discover_cmd->add_option("--data", d_data, "Training records file")->required();
  discover_cmd->add_option("--pool", d_pool, "Pool file")->required();
  discover_cmd->add_option("--out", d_out, "Output directory")->required();
  discover_cmd->add_option("--config", d_config, "Pipeline config file");

  // train-classifier
  auto* clf_cmd = app.add_subcommand("train-classifier", "Train the task classifier");
  std::string c_data, c_pool, c_discovery, c_out, c_config;
  double c_lr = 0.01;
  int c_epochs = 300, c_batch = 16;
  clf_cmd->add_option("--data", c_data, "Training records file")->required();
  clf_cmd->add_option("--pool", c_pool, "Pool file")->required();
  clf_cmd->add_option("--discovery", c_discovery, "Discovery artifact")->required();
  clf_cmd->add_option("--out", c_out, "Output directory")->required();
  clf_cmd->add_option("--config", c_config, "Pipeline config file");
  clf_cmd->add_option("--lr", c_lr, "Learning rate");
  clf_cmd->add_option("--epochs", c_epochs, "Training epochs");
  clf_cmd->add_option("--batch-size", c_batch, "Batch size");

  // train-router
  auto* rt_cmd = app.add_subcommand("train-router", "Train the quality estimator");
  std::string r_data, r_pool, r_discovery, r_classifier, r_out, r_config;
  double r_lr = 0.005;
  int r_base_epochs = 30, r_adapter_epochs = 200, r_batch = 16;
  rt_cmd->add_option("--data", r_data, "Training records file")->required();
  rt_cmd->add_option("--pool", r_pool, "Pool file")->required();
  rt_cmd->add_option("--discovery", r_discovery, "Discovery artifact")->required();
  rt_cmd->add_option("--classifier", r_classifier, "Classifier artifact")->required();
  rt_cmd->add_option("--out", r_out, "Output directory")->required();
  rt_cmd->add_option("--config", r_config, "Pipeline config file");
  rt_cmd->add_option("--lr", r_lr, "Learning rate");
  rt_cmd->add_option("--base-epochs", r_base_epochs, "Phase-1 epochs");
  rt_cmd->add_option("--adapter-epochs", r_adapter_epochs, "Phase-2 epochs");
  rt_cmd->add_option("--batch-size", r_batch, "Batch size");

  // route
  auto* route_cmd = app.add_subcommand("route", "Batch-route an input file");
  CommonPaths route_paths;
  std::string route_input, route_out;
  double route_tolerance = 0.0;
  route_cmd->add_option("--pool", route_paths.pool_path, "Pool file")->required();
  route_cmd->add_option("--discovery", route_paths.discovery_path, "Discovery artifact")
      ->required();
  route_cmd->add_option("--classifier", route_paths.classifier_path,
                        "Classifier artifact")
      ->required();
  route_cmd->add_option("--router", route_paths.router_path, "Router artifact")
      ->required();
  route_cmd->add_option("--config", route_paths.config_path, "Pipeline config file");
  route_cmd->add_option("--input", route_input, "Input embeddings file")->required();
  route_cmd->add_option("--out", route_out, "Decisions output file")->required();
  route_cmd->add_option("--tolerance", route_tolerance, "Cost-quality tolerance");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate routing quality and cost");
  CommonPaths eval_paths;
  std::string eval_data, eval_truth, eval_out;
  int eval_grid = 20;
  eval_cmd->add_option("--data", eval_data, "Evaluation records file")->required();
  eval_cmd->add_option("--pool", eval_paths.pool_path, "Pool file")->required();
  eval_cmd->add_option("--truth", eval_truth, "Ground truth artifact")->required();
  eval_cmd->add_option("--discovery", eval_paths.discovery_path, "Discovery artifact")
      ->required();
  eval_cmd->add_option("--classifier", eval_paths.classifier_path,
                       "Classifier artifact")
      ->required();
  eval_cmd->add_option("--router", eval_paths.router_path, "Router artifact")
      ->required();
  eval_cmd->add_option("--config", eval_paths.config_path, "Pipeline config file");
  eval_cmd->add_option("--out", eval_out, "Output directory")->required();
  eval_cmd->add_option("--grid-steps", eval_grid, "Tolerance grid steps");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve routing decisions over HTTP");
  CommonPaths serve_paths;
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  serve_cmd->add_option("--pool", serve_paths.pool_path, "Pool file")->required();
  serve_cmd->add_option("--discovery", serve_paths.discovery_path, "Discovery artifact")
      ->required();
  serve_cmd->add_option("--classifier", serve_paths.classifier_path,
                        "Classifier artifact")
      ->required();
  serve_cmd->add_option("--router", serve_paths.router_path, "Router artifact")
      ->required();
  serve_cmd->add_option("--config", serve_paths.config_path, "Pipeline config file");
  serve_cmd->add_option("--host", serve_host, "Bind address");
  serve_cmd->add_option("--port", serve_port, "Bind port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return 0;
    }
    app.exit(e);  // prints the usage message to stderr
    return 1;
  }

  try {
    if (synth_cmd->parsed())
      return run_synth(synth_out, synth_models, synth_tasks, synth_prompts, synth_dim,
                       synth_sep, synth_noise, synth_outliers, seed.value_or(0));
    if (discover_cmd->parsed())
      return run_discover(d_data, d_pool, d_out, d_config, seed);
    if (clf_cmd->parsed())
      return run_train_classifier(c_data, c_pool, c_discovery, c_out, c_config, seed,
                                  c_lr, c_epochs, c_batch);
    if (rt_cmd->parsed())
      return run_train_router(r_data, r_pool, r_discovery, r_classifier, r_out,
                              r_config, seed, r_lr, r_base_epochs, r_adapter_epochs,
                              r_batch);
    if (route_cmd->parsed())
      return run_route(route_paths, route_input, route_out, route_tolerance, seed);
    if (eval_cmd->parsed())
      return run_eval(eval_paths, eval_data, eval_truth, eval_out, seed, eval_grid);
    if (serve_cmd->parsed())
      return run_serve(serve_paths, serve_host, serve_port, seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace taskroute
