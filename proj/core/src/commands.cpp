#include "btm/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "btm/bezier.hpp"
#include "btm/condense.hpp"
#include "btm/data.hpp"
#include "btm/eval.hpp"
#include "btm/io.hpp"
#include "btm/mlp.hpp"
#include "btm/theory.hpp"
#include "btm/trajectory.hpp"
#include "btm/version.hpp"

namespace btm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void log_line(const CommandContext& ctx, const std::string& msg) {
  if (!ctx.quiet) std::cout << msg << "\n";
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// manifest.json keeps one entry per command; timestamps live only here
void update_manifest(const CommandContext& ctx, const std::string& command,
                     const std::vector<std::uint64_t>& seeds,
                     const std::vector<fs::path>& artifacts) {
  const fs::path path = ctx.out_dir / "manifest.json";
  json manifest;
  if (fs::exists(path)) manifest = json::parse(read_file(path));
  json entry;
  entry["config_hash"] = ctx.config.hash();
  entry["seeds"] = seeds;
  json files = json::array();
  for (const auto& a : artifacts) {
    if (!fs::exists(a)) throw std::runtime_error("manifest references missing file: " + a.string());
    files.push_back(a.string());
  }
  entry["artifacts"] = files;
  entry["timestamp"] = iso_timestamp();
  entry["tool_version"] = kToolVersion;
  manifest["commands"][command] = entry;
  atomic_write_text(path, manifest.dump(2) + "\n");
}

GenConfig gen_config_from(const RunConfig& c) {
  GenConfig g;
  g.n_samples = static_cast<int>(c.get_long("data.n_samples", g.n_samples));
  g.n_features = static_cast<int>(c.get_long("data.n_features", g.n_features));
  g.prevalence = c.get_double("data.prevalence", g.prevalence);
  g.class_separation = c.get_double("data.class_separation", g.class_separation);
  g.noise_scale = c.get_double("data.noise_scale", g.noise_scale);
  g.missing_rate = c.get_double("data.missing_rate", g.missing_rate);
  g.seed = c.get_seed("data.seed", g.seed);
  return g;
}

TabularDataset load_dataset(const CommandContext& ctx) {
  const auto& c = ctx.config;
  TabularDataset ds;
  const std::string source = c.get_string("data.source", "synthetic");
  if (source == "synthetic") {
    ds = generate_synthetic_clinical(gen_config_from(c));
  } else if (source == "csv") {
    const std::string path = c.get_string("data.csv_path", "");
    if (path.empty()) throw ConfigError("data.source=csv requires data.csv_path");
    if (!fs::exists(path)) throw ConfigError("dataset file not found: " + path);
    const RawTable raw = load_csv(path, c.get_string("data.label_column", "label"));
    ds = preprocess(raw, c.get_seed("data.seed", 1));
  } else {
    throw ConfigError("data.source must be synthetic or csv, got '" + source + "'");
  }
  if (c.get_bool("data.balance_train", false))
    ds = balance_train_split(ds, c.get_seed("data.seed", 1) + 0x5a5aULL);
  return ds;
}

MlpSpec spec_from(const RunConfig& c, int input_dim) {
  MlpSpec spec;
  spec.layer_widths = {input_dim};
  for (int w : c.get_int_list("model.hidden_widths", {64})) spec.layer_widths.push_back(w);
  spec.layer_widths.push_back(1);
  spec.dropout_rate = c.get_double("model.dropout", 0.25);
  spec.validate();
  return spec;
}

SgdConfig expert_config_from(const RunConfig& c, std::uint64_t seed) {
  SgdConfig cfg;
  cfg.lr = c.get_double("expert.lr", 0.02);
  cfg.momentum = c.get_double("expert.momentum", 0.9);
  cfg.epochs = static_cast<int>(c.get_long("expert.epochs", 100));
  cfg.batch_size = static_cast<int>(c.get_long("expert.batch_size", 256));
  cfg.snapshot_every = static_cast<int>(c.get_long("expert.snapshot_every", 1));
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

ControlOptConfig bezier_config_from(const RunConfig& c) {
  ControlOptConfig cfg;
  cfg.lr = c.get_double("bezier.lr", 1e-2);
  cfg.tol = c.get_double("bezier.tol", 1e-5);
  cfg.max_iters = static_cast<int>(c.get_long("bezier.max_iters", 300));
  cfg.mc_samples = static_cast<int>(c.get_long("bezier.mc_samples", 2));
  cfg.batch_size = static_cast<int>(c.get_long("bezier.batch_size", 256));
  cfg.full_batch = c.get_bool("bezier.full_batch", false);
  cfg.seed = c.get_seed("bezier.seed", 7);
  cfg.validate();
  return cfg;
}

CondenseConfig condense_config_from(const RunConfig& c, int ipc) {
  CondenseConfig cfg;
  cfg.segment_length = c.get_double("condense.segment_length", 0.2);
  cfg.t_start_max = c.get_double("condense.t_start_max", 0.8);
  cfg.uniform_pair_sampling = c.get_bool("condense.uniform_segments", false);
  cfg.student_steps = static_cast<int>(c.get_long("condense.student_steps", 30));
  cfg.meta_lr = c.get_double("condense.meta_lr", 100.0);
  cfg.meta_momentum = c.get_double("condense.meta_momentum", 0.9);
  cfg.eta_s_lr = c.get_double("condense.eta_s_lr", 1e-4);
  cfg.eta_s_momentum = c.get_double("condense.eta_s_momentum", 0.5);
  cfg.batch_size = static_cast<int>(c.get_long("condense.batch_size", 0));
  cfg.max_iters = static_cast<int>(c.get_long("condense.max_iters", 40000));
  cfg.eval_every = static_cast<int>(c.get_long("condense.eval_every", 10));
  cfg.seed = c.get_seed("condense.seed", 11);
  cfg.periodic_eval.lr = c.get_double("condense.eval_lr", 0.05);
  cfg.periodic_eval.momentum = c.get_double("condense.eval_momentum", 0.9);
  cfg.periodic_eval.epochs = static_cast<int>(c.get_long("condense.eval_epochs", 50));
  cfg.validate();
  (void)ipc;
  return cfg;
}

EvalConfig eval_config_from(const RunConfig& c) {
  EvalConfig cfg;
  cfg.lr = c.get_double("eval.lr", 0.05);
  cfg.momentum = c.get_double("eval.momentum", 0.9);
  cfg.epochs = static_cast<int>(c.get_long("eval.epochs", 100));
  cfg.n_seeds = static_cast<int>(c.get_long("eval.n_seeds", 10));
  cfg.batch_size = static_cast<int>(c.get_long("eval.batch_size", 256));
  cfg.seed_base = c.get_seed("eval.seed_base", 1000);
  cfg.validate();
  return cfg;
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

void parallel_for(int jobs, std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::exception_ptr first_error;
  const int workers = std::min<std::size_t>(jobs, n);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void write_synthetic_csv(const SyntheticDataset& synth,
                         const std::vector<std::string>& feature_names, const fs::path& path) {
  RawTable t;
  t.feature_names = feature_names;
  t.values = synth.inputs;
  t.labels = synth.labels;
  save_csv(t, path, "label");
}

SyntheticDataset read_synthetic_csv(const fs::path& path) {
  const RawTable t = load_csv(path, "label");
  const json meta = json::parse(read_file(path.string() + ".meta.json"));
  SyntheticDataset synth;
  synth.inputs = t.values;
  synth.labels = t.labels;
  synth.ipc = meta.at("ipc").get<int>();
  synth.eta_s = meta.at("eta_s").get<double>();
  synth.validate();
  return synth;
}

void write_history_csv(const CondenseHistory& history, const fs::path& path) {
  std::string out = "iteration,btm_loss,eta_s,val_auroc,val_auprc\n";
  char buf[160];
  for (const auto& row : history.rows) {
    std::string cells = std::to_string(row.iteration) + "," + fmt(row.btm_loss) + "," +
                        fmt(row.eta_s) + ",";
    if (!std::isnan(row.val_auroc)) cells += fmt(row.val_auroc);
    cells += ",";
    if (!std::isnan(row.val_auprc)) cells += fmt(row.val_auprc);
    out += cells + "\n";
    (void)buf;
  }
  atomic_write_text(path, out);
}

}  // namespace

int cmd_gen_data(const CommandContext& ctx) {
  const GenConfig gen = gen_config_from(ctx.config);
  const RawTable raw = generate_synthetic_clinical_raw(gen);
  const fs::path csv = ctx.out_dir / "data" / "synthetic_raw.csv";
  save_csv(raw, csv, "label");

  const TabularDataset ds = preprocess(raw, gen.seed);
  json meta;
  meta["n_samples"] = gen.n_samples;
  meta["n_features"] = gen.n_features;
  meta["prevalence"] = gen.prevalence;
  meta["class_separation"] = gen.class_separation;
  meta["noise_scale"] = gen.noise_scale;
  meta["missing_rate"] = gen.missing_rate;
  meta["seed"] = gen.seed;
  meta["split_prevalence"] = {{"train", ds.train.prevalence()},
                              {"val", ds.val.prevalence()},
                              {"test", ds.test.prevalence()}};
  meta["split_rows"] = {{"train", ds.train.inputs.rows()},
                        {"val", ds.val.inputs.rows()},
                        {"test", ds.test.inputs.rows()}};
  const fs::path meta_path = ctx.out_dir / "data" / "synthetic_raw.meta.json";
  atomic_write_text(meta_path, meta.dump(2) + "\n");
  update_manifest(ctx, "gen-data", {gen.seed}, {csv, meta_path});
  log_line(ctx, "wrote " + csv.string());
  return 0;
}

int cmd_train_experts(const CommandContext& ctx) {
  const TabularDataset ds = load_dataset(ctx);
  const MlpSpec spec = spec_from(ctx.config, ds.feature_dim());
  const int count = static_cast<int>(ctx.config.get_long("expert.count", 50));
  const std::uint64_t seed_base = ctx.config.get_seed("expert.seed_base", 100);

  std::vector<fs::path> artifacts(static_cast<std::size_t>(count));
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> failures(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) seeds.push_back(seed_base + i);

  parallel_for(ctx.jobs, static_cast<std::size_t>(count), [&](std::size_t i) {
    const SgdConfig cfg = expert_config_from(ctx.config, seeds[i]);
    const fs::path out =
        ctx.out_dir / "trajectories" / ("expert_s" + std::to_string(seeds[i]) + ".btmt");
    try {
      const Trajectory traj = train_expert(ds, spec, cfg);
      save_trajectory(traj, out);
      artifacts[i] = out;
    } catch (const DivergenceError& e) {
      failures[i] = e.what();
    }
  });

  std::vector<fs::path> produced;
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    if (!failures[i].empty()) {
      log_line(ctx, "expert seed " + std::to_string(seeds[i]) + " diverged: " + failures[i]);
      continue;
    }
    produced.push_back(artifacts[i]);
    log_line(ctx, "wrote " + artifacts[i].string());
  }
  if (produced.empty()) throw std::runtime_error("all expert runs diverged");
  update_manifest(ctx, "train-experts", seeds, produced);
  return 0;
}

int cmd_fit_bezier(const CommandContext& ctx) {
  const TabularDataset ds = load_dataset(ctx);
  const ControlOptConfig cfg = bezier_config_from(ctx.config);
  const auto traj_files = sorted_files(ctx.out_dir / "trajectories", ".btmt");
  if (traj_files.empty())
    throw ConfigError("no trajectory files under " +
                      (ctx.out_dir / "trajectories").string());

  std::vector<fs::path> artifacts;
  std::mutex artifacts_mutex;
  parallel_for(ctx.jobs, traj_files.size(), [&](std::size_t i) {
    const Trajectory traj = load_trajectory(traj_files[i]);
    ControlOptConfig fit_cfg = cfg;
    fit_cfg.seed = cfg.seed + i;  // decorrelate t draws across fits
    auto [path, trace] = optimize_control_point(traj.checkpoints.front(),
                                                traj.checkpoints.back(), ds, traj.spec,
                                                fit_cfg);
    const std::string stem = traj_files[i].stem().string();
    const fs::path out = ctx.out_dir / "surrogates" / (stem + ".btmb");
    const fs::path trace_out = ctx.out_dir / "surrogates" / (stem + "_trace.csv");
    save_path(path, out, stem, &fit_cfg);
    write_trace_csv(trace, trace_out);
    std::lock_guard<std::mutex> lock(artifacts_mutex);
    artifacts.push_back(out);
    artifacts.push_back(trace_out);
  });
  std::sort(artifacts.begin(), artifacts.end());
  for (const auto& a : artifacts) log_line(ctx, "wrote " + a.string());
  update_manifest(ctx, "fit-bezier", {cfg.seed}, artifacts);
  return 0;
}

int cmd_condense(const CommandContext& ctx) {
  const TabularDataset ds = load_dataset(ctx);
  const MlpSpec spec = spec_from(ctx.config, ds.feature_dim());
  const int ipc = static_cast<int>(ctx.config.get_long("condense.ipc", 50));
  const std::string method = ctx.config.get_string("condense.method", "btm");
  const std::uint64_t seed = ctx.config.get_seed("condense.seed", 11);
  const CondenseConfig cfg = condense_config_from(ctx.config, ipc);

  SyntheticDataset best;
  CondenseHistory history;
  if (method == "random") {
    best = random_coreset(ds, ipc, seed);
  } else {
    const std::string init_name = ctx.config.get_string("condense.init", "real");
    const InitStrategy init = init_name == "real" ? InitStrategy::real
                             : init_name == "random"
                                 ? InitStrategy::random
                                 : throw ConfigError("condense.init must be real or random");
    const SyntheticDataset synth0 = init_synthetic(ds, ipc, init, seed);
    if (method == "btm") {
      const auto files = sorted_files(ctx.out_dir / "surrogates", ".btmb");
      if (files.empty())
        throw ConfigError("no surrogate files under " + (ctx.out_dir / "surrogates").string());
      std::vector<BezierPath> paths;
      for (const auto& f : files) paths.push_back(load_path(f));
      std::tie(best, history) = condense_run(paths, ds, spec, synth0, cfg);
    } else if (method == "mtt") {
      const auto files = sorted_files(ctx.out_dir / "trajectories", ".btmt");
      if (files.empty())
        throw ConfigError("no trajectory files under " +
                          (ctx.out_dir / "trajectories").string());
      std::vector<Trajectory> trajs;
      for (const auto& f : files) trajs.push_back(load_trajectory(f));
      const int m = static_cast<int>(ctx.config.get_long("condense.mtt_expert_epochs", 5));
      SegmentSampler sampler = [&trajs, m](std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> pick(0, trajs.size() - 1);
        return mtt_baseline_segment(trajs[pick(rng)], m, rng);
      };
      std::tie(best, history) = condense_run(sampler, ds, spec, synth0, cfg);
    } else {
      throw ConfigError("condense.method must be btm, mtt, or random");
    }
  }

  const std::string stem = method + "_ipc" + std::to_string(ipc);
  const fs::path csv = ctx.out_dir / "synthetic" / (stem + ".csv");
  write_synthetic_csv(best, ds.feature_names, csv);
  json meta;
  meta["method"] = method;
  meta["ipc"] = best.ipc;
  meta["eta_s"] = best.eta_s;
  meta["config_hash"] = ctx.config.hash();
  meta["best_val_auprc"] = history.best_iteration >= 0 ? json(history.best_val_auprc) : json();
  meta["best_val_auroc"] = history.best_iteration >= 0 ? json(history.best_val_auroc) : json();
  meta["best_iteration"] = history.best_iteration;
  const fs::path meta_path = ctx.out_dir / "synthetic" / (stem + ".csv.meta.json");
  atomic_write_text(meta_path, meta.dump(2) + "\n");
  const fs::path hist_path = ctx.out_dir / "synthetic" / (stem + "_history.csv");
  write_history_csv(history, hist_path);
  update_manifest(ctx, "condense", {seed}, {csv, meta_path, hist_path});
  log_line(ctx, "wrote " + csv.string());
  return 0;
}

int cmd_evaluate(const CommandContext& ctx) {
  const TabularDataset ds = load_dataset(ctx);
  const MlpSpec spec = spec_from(ctx.config, ds.feature_dim());
  const EvalConfig cfg = eval_config_from(ctx.config);
  const std::string target = ctx.config.get_string("eval.target", "synthetic");

  std::string method;
  int ipc = 0;
  MetricSummary summary;
  if (target == "full") {
    method = "full";
    summary = evaluate_training_set(ds.train.inputs, ds.train.labels, spec, ds.test, cfg);
  } else if (target == "synthetic") {
    const int cfg_ipc = static_cast<int>(ctx.config.get_long("condense.ipc", 50));
    const std::string fallback =
        (ctx.out_dir / "synthetic" /
         (ctx.config.get_string("condense.method", "btm") + "_ipc" +
          std::to_string(cfg_ipc) + ".csv"))
            .string();
    const std::string path = ctx.config.get_string("eval.synthetic_path", fallback);
    if (!fs::exists(path)) throw ConfigError("synthetic dataset not found: " + path);
    const SyntheticDataset synth = read_synthetic_csv(path);
    const json meta = json::parse(read_file(path + ".meta.json"));
    method = meta.at("method").get<std::string>();
    ipc = synth.ipc;
    summary = evaluate_synthetic(synth, spec, ds.test, cfg);
  } else {
    throw ConfigError("eval.target must be synthetic or full");
  }

  const fs::path results = ctx.out_dir / "results.csv";
  std::string out;
  if (fs::exists(results)) {
    out = read_file(results);
  } else {
    out = "method,ipc,auroc_mean,auroc_std,auprc_mean,auprc_std\n";
  }
  out += method + "," + std::to_string(ipc) + "," + fmt(summary.auroc_mean) + "," +
         fmt(summary.auroc_std) + "," + fmt(summary.auprc_mean) + "," +
         fmt(summary.auprc_std) + "\n";
  atomic_write_text(results, out);
  update_manifest(ctx, "evaluate", cfg.seed_list(), {results});
  log_line(ctx, method + " auroc " + fmt(summary.auroc_mean) + " auprc " +
                    fmt(summary.auprc_mean));
  return 0;
}

int cmd_report_storage(const CommandContext& ctx) {
  const auto traj_files = sorted_files(ctx.out_dir / "trajectories", ".btmt");
  const auto surr_files = sorted_files(ctx.out_dir / "surrogates", ".btmb");
  if (traj_files.empty()) throw ConfigError("no trajectory files to report on");

  json pairs = json::array();
  double total_traj_bytes = 0.0, total_surr_bytes = 0.0;
  for (const auto& tf : traj_files) {
    const Trajectory traj = load_trajectory(tf);
    const double traj_bytes = static_cast<double>(fs::file_size(tf));
    json row;
    row["trajectory"] = tf.string();
    row["checkpoints"] = traj.checkpoints.size();
    row["trajectory_bytes"] = traj_bytes;
    row["checkpoint_ratio"] = static_cast<double>(traj.checkpoints.size()) / 3.0;
    const fs::path sf = ctx.out_dir / "surrogates" / (tf.stem().string() + ".btmb");
    if (fs::exists(sf)) {
      row["surrogate"] = sf.string();
      row["surrogate_bytes"] = static_cast<double>(fs::file_size(sf));
      total_surr_bytes += static_cast<double>(fs::file_size(sf));
    }
    total_traj_bytes += traj_bytes;
    pairs.push_back(row);
  }

  // fit cost in equivalent training epochs: 2 * T_max forward passes vs
  // |D_train| / b forward passes per epoch
  const double t_max = ctx.config.get_double("bezier.max_iters", 300);
  const double batch = ctx.config.get_double("bezier.batch_size", 256);
  double train_size = ctx.config.get_double("storage.train_size", 0.0);
  if (train_size <= 0.0) {
    const TabularDataset ds = load_dataset(ctx);
    train_size = static_cast<double>(ds.train.inputs.rows());
  }
  const double equivalent_epochs = 2.0 * t_max * batch / train_size;

  json report;
  report["pairs"] = pairs;
  report["total_trajectory_bytes"] = total_traj_bytes;
  report["total_surrogate_bytes"] = total_surr_bytes;
  report["fit_cost"] = {{"t_max", t_max},
                        {"batch_size", batch},
                        {"train_size", train_size},
                        {"equivalent_epochs", equivalent_epochs}};
  const fs::path out = ctx.out_dir / "storage_report.json";
  atomic_write_text(out, report.dump(2) + "\n");

  char line[256];
  std::string text;
  for (const auto& row : pairs) {
    std::snprintf(line, sizeof line, "%s: %zu checkpoints, ratio %.2fx\n",
                  row.at("trajectory").get<std::string>().c_str(),
                  row.at("checkpoints").get<std::size_t>(),
                  row.at("checkpoint_ratio").get<double>());
    text += line;
  }
  std::snprintf(line, sizeof line,
                "control-point fit: %.3f equivalent epochs (T_max=%g, b=%g, |D_train|=%g)\n",
                equivalent_epochs, t_max, batch, train_size);
  text += line;
  atomic_write_text(ctx.out_dir / "storage_report.txt", text);
  update_manifest(ctx, "report-storage", {}, {out, ctx.out_dir / "storage_report.txt"});
  log_line(ctx, text);
  return 0;
}

int cmd_theory_report(const CommandContext& ctx) {
  const TabularDataset ds = load_dataset(ctx);
  const auto traj_files = sorted_files(ctx.out_dir / "trajectories", ".btmt");
  if (traj_files.empty()) throw ConfigError("no trajectory files to check");
  const int n_t = static_cast<int>(ctx.config.get_long("theory.n_t", kDefaultTSamples));
  const int n_x = static_cast<int>(ctx.config.get_long("theory.n_x", kDefaultXSamples));
  const std::uint64_t seed = ctx.config.get_seed("theory.seed", 17);

  std::vector<TheoremReport> reports(traj_files.size());
  std::vector<fs::path> artifacts(traj_files.size());
  parallel_for(ctx.jobs, traj_files.size(), [&](std::size_t i) {
    const fs::path sf = ctx.out_dir / "surrogates" / (traj_files[i].stem().string() + ".btmb");
    if (!fs::exists(sf))
      throw ConfigError("no surrogate matching trajectory " + traj_files[i].string());
    const Trajectory traj = load_trajectory(traj_files[i]);
    const BezierPath path = load_path(sf);
    reports[i] = theorem_report(traj, path, ds, traj.spec, n_t, n_x, seed + i);
    const fs::path out =
        ctx.out_dir / "theory" / (traj_files[i].stem().string() + "_report.json");
    atomic_write_text(out, report_to_json(reports[i]));
    artifacts[i] = out;
  });

  int bound_holds = 0, curvature_holds = 0;
  double mean_kappa = 0.0, mean_ratio = 0.0;
  std::string text;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    bound_holds += reports[i].avg_loss_bound_holds;
    curvature_holds += reports[i].curvature_holds;
    mean_kappa += reports[i].kappa;
    mean_ratio += reports[i].pred_dev_ratio;
    text += "== " + traj_files[i].stem().string() + " ==\n" + report_to_text(reports[i]);
  }
  mean_kappa /= static_cast<double>(reports.size());
  mean_ratio /= static_cast<double>(reports.size());

  json summary;
  summary["pairs"] = reports.size();
  summary["avg_loss_bound_holds"] = bound_holds;
  summary["curvature_holds"] = curvature_holds;
  summary["mean_kappa"] = mean_kappa;
  summary["mean_pred_dev_ratio"] = mean_ratio;
  const fs::path sum_path = ctx.out_dir / "theory" / "summary.json";
  atomic_write_text(sum_path, summary.dump(2) + "\n");
  char line[160];
  std::snprintf(line, sizeof line,
                "bound (i) holds %d/%zu, curvature (ii) holds %d/%zu, mean kappa %.4g\n",
                bound_holds, reports.size(), curvature_holds, reports.size(), mean_kappa);
  text += line;
  const fs::path txt_path = ctx.out_dir / "theory" / "summary.txt";
  atomic_write_text(txt_path, text);
  artifacts.push_back(sum_path);
  artifacts.push_back(txt_path);
  update_manifest(ctx, "theory-report", {seed}, artifacts);
  log_line(ctx, line);
  return 0;
}

int run_command(const std::string& name, const CommandContext& ctx) {
  if (name == "gen-data") return cmd_gen_data(ctx);
  if (name == "train-experts") return cmd_train_experts(ctx);
  if (name == "fit-bezier") return cmd_fit_bezier(ctx);
  if (name == "condense") return cmd_condense(ctx);
  if (name == "evaluate") return cmd_evaluate(ctx);
  if (name == "report-storage") return cmd_report_storage(ctx);
  if (name == "theory-report") return cmd_theory_report(ctx);
  throw ConfigError("unknown command: " + name);
}

}  // namespace btm
