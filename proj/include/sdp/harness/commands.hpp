#pragma once

// The five CLI verbs as library functions. Every command is a pure function of
// the config, its input files and the seeds, except the latency benchmark.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sdp/checkpoint.hpp"
#include "sdp/harness/config.hpp"
#include "sdp/policy.hpp"
#include "sdp/sampler.hpp"
#include "sdp/toy_envs.hpp"
#include "sdp/trainer.hpp"

namespace sdp::harness {

namespace fs = std::filesystem;

inline fs::path data_dir(const RunConfig& c) { return fs::path(c.out_dir) / "data"; }
inline fs::path task_data_path(const RunConfig& c, int task) {
  return data_dir(c) / ("task" + std::to_string(task) + ".txt");
}
inline fs::path merged_data_path(const RunConfig& c) { return data_dir(c) / "merged.txt"; }
inline fs::path checkpoint_path(const RunConfig& c, Engine e, std::uint64_t seed) {
  return fs::path(c.out_dir) / ("ckpt_" + std::string(to_string(e)) + "_seed" + std::to_string(seed) + ".bin");
}
inline fs::path loss_log_path(const RunConfig& c, Engine e, std::uint64_t seed) {
  return fs::path(c.out_dir) / ("loss_" + std::string(to_string(e)) + "_seed" + std::to_string(seed) + ".tsv");
}

namespace detail {

inline void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw DataError("cannot create directory: " + p.string());
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + p.string());
  os << text;
  if (!os) throw DataError("failed writing: " + p.string());
}

inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// gen-data

inline void cmd_gen_data(const RunConfig& c, std::ostream& log) {
  if (c.demos_per_task < 1) throw UsageError("gen-data: demos_per_task must be >= 1 (refusing an empty dataset)");
  detail::ensure_dir(data_dir(c));
  std::vector<Demonstration> merged;
  for (int task : c.tasks) {
    const auto demos = make_demonstrations(task, c.demos_per_task, c.data_seed);
    write_dataset(task_data_path(c, task).string(), demos);
    merged.insert(merged.end(), demos.begin(), demos.end());
    log << "task " << task << " (" << task_spec(task).expert << "): " << demos.size() << " demos -> "
        << task_data_path(c, task).string() << "\n";
  }
  write_dataset(merged_data_path(c).string(), merged);
  log << "merged: " << merged.size() << " demos -> " << merged_data_path(c).string() << "\n";
}

// ---------------------------------------------------------------------------
// train

inline TrainOptions train_options(const RunConfig& c) {
  TrainOptions o;
  o.epochs = c.epochs;
  o.windows_per_demo = c.windows_per_demo;
  o.batch.batch_size = c.batch_size;
  o.batch.consistency_fraction = c.k_split;
  o.batch.p_drop = c.p_drop;
  o.adamw.lr = c.lr;
  o.adamw.weight_decay = c.weight_decay;
  o.grid.levels = c.grid_m;
  return o;
}

inline NetworkConfig network_config(const RunConfig& c, int horizon, int obs_dim) {
  NetworkConfig n;
  n.horizon = horizon;
  n.obs_dim = obs_dim;
  n.num_tasks = kNumTasks;
  n.hidden = c.hidden;
  n.mode = c.mode;
  return n;
}

inline DatasetFile load_training_data(const RunConfig& c) {
  const fs::path p = merged_data_path(c);
  if (!fs::exists(p)) throw DataError("dataset not found: " + p.string() + " (run gen-data first)");
  DatasetFile f = read_dataset_file(p.string());
  if (f.demos.empty()) throw DataError("dataset is empty: " + p.string());
  for (const Demonstration& d : f.demos) {
    if (std::find(c.tasks.begin(), c.tasks.end(), d.task_id) == c.tasks.end()) {
      throw DataError(p.string() + ": contains task " + std::to_string(d.task_id) + " not listed in tasks");
    }
  }
  return f;
}

inline Checkpoint load_checked(const RunConfig& c, Engine e, std::uint64_t seed) {
  const fs::path p = checkpoint_path(c, e, seed);
  Checkpoint k = load_checkpoint(p.string());
  if (k.engine != e) throw DataError(p.string() + ": engine mismatch");
  if (k.config_hash != training_hash(c, e)) {
    throw DataError(p.string() + ": config hash " + hex(k.config_hash) + " does not match the current config (" +
                    hex(training_hash(c, e)) + ")");
  }
  return k;
}

inline void cmd_train(const RunConfig& c, std::ostream& log) {
  const DatasetFile file = load_training_data(c);
  const std::vector<Demonstration> data = WorkspaceNormalizer{}.to_model(file.demos);
  const TrainOptions opts = train_options(c);
  detail::ensure_dir(c.out_dir);
  for (Engine engine : c.engines) {
    for (std::uint64_t seed : c.seeds) {
      const fs::path ckpt = checkpoint_path(c, engine, seed);
      const fs::path loss_path = loss_log_path(c, engine, seed);
      TrainState st(PolicyNetwork(network_config(c, file.horizon, file.obs_dim), seed), opts.adamw, seed);
      const bool resume = fs::exists(ckpt);
      if (resume) {
        Checkpoint k = load_checked(c, engine, seed);
        if (!(k.net.config() == st.net.config())) throw DataError(ckpt.string() + ": network shape mismatch");
        st.net = std::move(k.net);
        st.optimizer = std::move(k.optimizer);
        load_streams(st.streams, k.stream_state);
        st.epochs_completed = k.epochs_completed;
        if (st.epochs_completed >= static_cast<std::uint64_t>(c.epochs)) {
          log << to_string(engine) << " seed " << seed << ": already trained for " << st.epochs_completed
              << " epochs\n";
          continue;
        }
        log << to_string(engine) << " seed " << seed << ": resuming at epoch " << st.epochs_completed << "\n";
      }
      std::ofstream loss(loss_path, resume ? std::ios::app : std::ios::trunc);
      if (!loss) throw DataError("cannot open for writing: " + loss_path.string());
      if (!resume) loss << "epoch\tloss\n";
      log << to_string(engine) << " seed " << seed << ": " << data.size() << " demos, "
          << batches_per_epoch(data.size(), opts) << " steps/epoch, " << c.epochs << " epochs\n";
      train(st, data, engine, opts, [&](std::uint64_t epoch, double mean) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", mean);
        loss << epoch << '\t' << buf << '\n';
        if (epoch % 50 == 0 || epoch == static_cast<std::uint64_t>(c.epochs)) {
          log << "  epoch " << epoch << " loss " << buf << "\n" << std::flush;
        }
      });
      if (!loss) throw DataError("failed writing: " + loss_path.string());
      Checkpoint k;
      k.engine = engine;
      k.config_hash = training_hash(c, engine);
      k.epochs_completed = st.epochs_completed;
      k.net = st.net;
      k.optimizer = st.optimizer;
      k.stream_state = save_streams(st.streams);
      save_checkpoint(ckpt.string(), k);
      log << "  saved " << ckpt.string() << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// eval

struct MetricsRecord {
  int task_id = 0;
  Engine engine = Engine::kShortcut;
  int num_steps = 0;
  std::uint64_t seed = 0;
  int successes = 0;
  int episodes = 0;
  double success_rate() const { return static_cast<double>(successes) / episodes; }
};

struct ConfusionRecord {
  Engine engine = Engine::kShortcut;
  int num_steps = 0;
  std::uint64_t seed = 0;
  int task_id = 0;  // predicate
  int label = 0;    // condition the policy was run with
  int successes = 0;
  int episodes = 0;
};

using PolicyFn = std::function<ActionChunk(const Scene&, const Eigen::VectorXd&, const TaskCondition&, Rng&)>;
/// Builds the policy evaluated for one (engine, seed, step count).
using PolicyFactory = std::function<PolicyFn(Engine, std::uint64_t seed, int num_steps)>;

struct EvalOutput {
  std::vector<MetricsRecord> metrics;
  std::vector<ConfusionRecord> confusion;
};

/// Episodes for (seed, task) share scenes across engines, step counts and labels.
inline std::uint64_t episode_seed(std::uint64_t seed, int task) {
  return mix_seed(seed, static_cast<std::uint64_t>(task));
}

inline EvalOutput run_eval(const RunConfig& c, const PolicyFactory& factory, int threads) {
  EvalOutput out;
  for (Engine engine : c.engines) {
    for (std::uint64_t seed : c.seeds) {
      for (int steps : c.eval_steps) {
        const PolicyFn policy = factory(engine, seed, steps);
        for (int task : c.tasks) {
          const EvalResult r =
              evaluate_policy(policy, task_spec(task), c.episodes, episode_seed(seed, task), task, threads);
          out.metrics.push_back({task, engine, steps, seed, r.successes, r.episodes});
        }
        if (c.tasks.size() < 2 || steps != c.eval_steps.front()) continue;
        for (int task : c.tasks) {
          for (int label : c.tasks) {
            const EvalResult r =
                evaluate_policy(policy, task_spec(task), c.episodes, episode_seed(seed, task), label, threads);
            out.confusion.push_back({engine, steps, seed, task, label, r.successes, r.episodes});
          }
        }
      }
    }
  }
  return out;
}

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population
};

inline Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  if (xs.empty()) return a;
  for (double x : xs) a.mean += x;
  a.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - a.mean) * (x - a.mean);
  a.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return a;
}

inline const char* kMetricsHeader =
    "config_hash\ttask_id\tengine\tnum_steps\tseed\tsuccess_rate\tsuccesses\tepisodes\thorizon\tobs_dim\t"
    "latency_median_ms\tlatency_mean_ms\tlatency_std_ms\n";
inline const char* kSummaryHeader = "config_hash\ttask_id\tengine\tnum_steps\tseeds\tmean_success\tstd_success\n";
inline const char* kConfusionHeader =
    "config_hash\tengine\tnum_steps\tseed\ttask_id\tlabel\tsuccess_rate\tsuccesses\tepisodes\n";

inline std::string format_metrics(const RunConfig& c, const std::vector<MetricsRecord>& rows, int horizon,
                                  int obs_dim) {
  const std::string h = hex(config_hash(c));
  std::string out = kMetricsHeader;
  for (const MetricsRecord& r : rows) {
    out += h + '\t' + std::to_string(r.task_id) + '\t' + std::string(to_string(r.engine)) + '\t' +
           std::to_string(r.num_steps) + '\t' + std::to_string(r.seed) + '\t' + detail::fixed(r.success_rate()) +
           '\t' + std::to_string(r.successes) + '\t' + std::to_string(r.episodes) + '\t' + std::to_string(horizon) +
           '\t' + std::to_string(obs_dim) + "\tna\tna\tna\n";
  }
  return out;
}

inline std::string format_summary(const RunConfig& c, const std::vector<MetricsRecord>& rows) {
  const std::string h = hex(config_hash(c));
  std::string out = kSummaryHeader;
  for (Engine engine : c.engines) {
    for (int steps : c.eval_steps) {
      for (int task : c.tasks) {
        std::vector<double> rates;
        for (const MetricsRecord& r : rows)
          if (r.engine == engine && r.num_steps == steps && r.task_id == task) rates.push_back(r.success_rate());
        const Aggregate a = aggregate(rates);
        out += h + '\t' + std::to_string(task) + '\t' + std::string(to_string(engine)) + '\t' +
               std::to_string(steps) + '\t' + std::to_string(rates.size()) + '\t' + detail::fixed(a.mean) + '\t' +
               detail::fixed(a.std) + '\n';
      }
    }
  }
  return out;
}

inline std::string format_confusion(const RunConfig& c, const std::vector<ConfusionRecord>& rows) {
  const std::string h = hex(config_hash(c));
  std::string out = kConfusionHeader;
  for (const ConfusionRecord& r : rows) {
    out += h + '\t' + std::string(to_string(r.engine)) + '\t' + std::to_string(r.num_steps) + '\t' +
           std::to_string(r.seed) + '\t' + std::to_string(r.task_id) + '\t' + std::to_string(r.label) + '\t' +
           detail::fixed(static_cast<double>(r.successes) / r.episodes) + '\t' + std::to_string(r.successes) +
           '\t' + std::to_string(r.episodes) + '\n';
  }
  return out;
}

/// Policies backed by the trained checkpoints; fails listing every missing file.
class CheckpointPolicies {
 public:
  explicit CheckpointPolicies(const RunConfig& c) : c_(c) {
    std::string missing;
    for (Engine e : c.engines)
      for (std::uint64_t s : c.seeds)
        if (!fs::exists(checkpoint_path(c, e, s))) missing += "\n  " + checkpoint_path(c, e, s).string();
    if (!missing.empty()) throw DataError("missing checkpoint(s):" + missing);
    for (Engine e : c.engines)
      for (std::uint64_t s : c.seeds) nets_.emplace(std::make_pair(e, s), load_checked(c, e, s).net);
  }

  const PolicyNetwork& net(Engine e, std::uint64_t seed) const { return nets_.at({e, seed}); }

  PolicyFn operator()(Engine e, std::uint64_t seed, int steps) const {
    NetworkPolicy p;
    p.net = &net(e, seed);
    p.sampler.engine = e;
    p.sampler.num_steps = steps;
    p.sampler.guidance_weight = c_.guidance_weight;
    p.sampler.horizon = p.net->config().horizon;
    p.grid.levels = c_.grid_m;
    return p;
  }

 private:
  RunConfig c_;
  std::map<std::pair<Engine, std::uint64_t>, PolicyNetwork> nets_;
};

inline EvalOutput cmd_eval(const RunConfig& c, std::ostream& log, int threads,
                           const PolicyFactory& factory = {}) {
  int horizon = kHorizon, obs_dim = kObsDim;
  EvalOutput out;
  if (factory) {
    out = run_eval(c, factory, threads);
  } else {
    const CheckpointPolicies policies(c);
    const NetworkConfig& nc = policies.net(c.engines.front(), c.seeds.front()).config();
    horizon = nc.horizon;
    obs_dim = nc.obs_dim;
    out = run_eval(c, std::cref(policies), threads);
  }
  detail::ensure_dir(c.out_dir);
  const fs::path dir(c.out_dir);
  detail::write_text(dir / "metrics.tsv", format_metrics(c, out.metrics, horizon, obs_dim));
  const std::string summary = format_summary(c, out.metrics);
  detail::write_text(dir / "summary.tsv", summary);
  if (!out.confusion.empty()) detail::write_text(dir / "confusion.tsv", format_confusion(c, out.confusion));
  log << summary;
  return out;
}

// ---------------------------------------------------------------------------
// bench

struct BenchRow {
  Engine engine = Engine::kShortcut;
  int num_steps = 0;
  LatencyStats stats;
  double ratio = 0.0;  // ddim-10 median / this median
};

inline std::vector<BenchRow> cmd_bench(const RunConfig& c, std::ostream& log) {
  if (c.bench_repeats < kMinTimingRepeats) {
    throw UsageError("bench: repeats must be >= " + std::to_string(kMinTimingRepeats));
  }
  // Latency depends on the widths only; trained weights are used when present.
  auto network = [&](Engine e) {
    const std::uint64_t seed = c.seeds.front();
    if (fs::exists(checkpoint_path(c, e, seed))) return load_checked(c, e, seed).net;
    return PolicyNetwork(network_config(c, kHorizon, kObsDim), seed);
  };
  const Scene scene = make_scene_from_seed(c.data_seed);
  const Eigen::VectorXd obs = WorkspaceNormalizer{}.observation(observation(scene));
  const TaskCondition cond = TaskCondition::task(c.tasks.front());
  StepSizeGrid grid;
  grid.levels = c.grid_m;

  std::vector<int> steps = c.eval_steps;
  std::sort(steps.begin(), steps.end(), std::greater<>());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());

  std::vector<BenchRow> rows;
  const PolicyNetwork ddim_net = network(Engine::kDdim);
  for (Engine e : {Engine::kDdim, Engine::kShortcut}) {
    const PolicyNetwork net = e == Engine::kDdim ? ddim_net : network(e);
    for (int n : steps) {
      SamplerConfig cfg;
      cfg.engine = e;
      cfg.num_steps = n;
      cfg.horizon = net.config().horizon;
      cfg.guidance_weight = c.guidance_weight;
      rows.push_back({e, n, time_inference(net, obs, cond, cfg, c.bench_repeats, grid), 0.0});
    }
  }
  double reference = 0.0;
  for (const BenchRow& r : rows)
    if (r.engine == Engine::kDdim && r.num_steps == 10) reference = r.stats.median_ms;
  if (reference == 0.0) {
    SamplerConfig cfg;
    cfg.engine = Engine::kDdim;
    cfg.num_steps = 10;
    cfg.horizon = ddim_net.config().horizon;
    cfg.guidance_weight = c.guidance_weight;
    reference = time_inference(ddim_net, obs, cond, cfg, c.bench_repeats, grid).median_ms;
  }
  std::string text = "engine\tnum_steps\trepeats\tmedian_ms\tmean_ms\tstd_ms\tspeedup_vs_ddim10\n";
  for (BenchRow& r : rows) {
    r.ratio = reference / r.stats.median_ms;
    text += std::string(to_string(r.engine)) + '\t' + std::to_string(r.num_steps) + '\t' +
            std::to_string(r.stats.repeats) + '\t' + detail::fixed(r.stats.median_ms, 4) + '\t' +
            detail::fixed(r.stats.mean_ms, 4) + '\t' + detail::fixed(r.stats.std_ms, 4) + '\t' +
            detail::fixed(r.ratio, 2) + '\n';
  }
  detail::ensure_dir(c.out_dir);
  detail::write_text(fs::path(c.out_dir) / "bench.tsv", text);
  log << text;
  return rows;
}

// ---------------------------------------------------------------------------
// report

namespace detail {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name, const std::string& file) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(file + ": missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  }
};

inline Table read_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw DataError(path + ":1: missing header");
  t.header = split(line, '\t');
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    auto fields = split(line, '\t');
    if (fields.size() != t.header.size()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

inline double parse_rate(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !(v >= 0.0 && v <= 1.0)) {
    throw DataError(where + ": bad success rate '" + s + "'");
  }
  return v;
}

}  // namespace detail

/// Markdown summary of metrics.tsv and confusion.tsv files (detected by header).
inline std::string cmd_report(const std::vector<std::string>& files, const std::string& out_dir, std::ostream& log) {
  if (files.empty()) throw UsageError("report: at least one metrics file is required");
  // (task, engine, steps) -> rates over seeds; (engine, steps, task, label) -> rates.
  std::map<int, std::map<std::string, std::map<int, std::vector<double>>>> success;
  std::map<std::pair<std::string, int>, std::map<std::pair<int, int>, std::vector<double>>> confusion;
  std::string shape;
  for (const std::string& f : files) {
    const detail::Table t = detail::read_table(f);
    const bool is_confusion = std::find(t.header.begin(), t.header.end(), "label") != t.header.end();
    const int c_task = t.column("task_id", f), c_engine = t.column("engine", f);
    const int c_steps = t.column("num_steps", f), c_rate = t.column("success_rate", f);
    if (is_confusion) {
      const int c_label = t.column("label", f);
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const std::string where = f + ":" + std::to_string(i + 2);
        confusion[{r[static_cast<std::size_t>(c_engine)], detail::parse_number<int>(r[static_cast<std::size_t>(c_steps)], where)}]
                 [{detail::parse_number<int>(r[static_cast<std::size_t>(c_task)], where),
                   detail::parse_number<int>(r[static_cast<std::size_t>(c_label)], where)}]
                     .push_back(detail::parse_rate(r[static_cast<std::size_t>(c_rate)], where));
      }
      continue;
    }
    const int c_h = t.column("horizon", f), c_obs = t.column("obs_dim", f);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      const std::string where = f + ":" + std::to_string(i + 2);
      const std::string this_shape =
          "H=" + r[static_cast<std::size_t>(c_h)] + " obs_dim=" + r[static_cast<std::size_t>(c_obs)];
      if (shape.empty()) shape = this_shape;
      if (this_shape != shape) throw DataError(where + ": inconsistent " + this_shape + " (expected " + shape + ")");
      success[detail::parse_number<int>(r[static_cast<std::size_t>(c_task)], where)][r[static_cast<std::size_t>(c_engine)]]
             [detail::parse_number<int>(r[static_cast<std::size_t>(c_steps)], where)]
                 .push_back(detail::parse_rate(r[static_cast<std::size_t>(c_rate)], where));
    }
  }

  std::ostringstream md;
  md << "# Success rates\n\n";
  if (!shape.empty()) md << "Action horizon and observation size: " << shape << ".\n\n";
  for (const auto& [task, engines] : success) {
    std::vector<int> steps;
    for (const auto& [e, by_steps] : engines)
      for (const auto& [n, rates] : by_steps)
        if (std::find(steps.begin(), steps.end(), n) == steps.end()) steps.push_back(n);
    std::sort(steps.begin(), steps.end(), std::greater<>());
    md << "## Task " << task << " (" << task_spec(task).expert << ")\n\n| engine |";
    for (int n : steps) md << ' ' << n << (n == 1 ? " step |" : " steps |");
    md << "\n|---|";
    for (std::size_t i = 0; i < steps.size(); ++i) md << "---|";
    md << '\n';
    for (const auto& [e, by_steps] : engines) {
      md << "| " << e << " |";
      for (int n : steps) {
        const auto it = by_steps.find(n);
        if (it == by_steps.end()) {
          md << " - |";
          continue;
        }
        const Aggregate a = aggregate(it->second);
        md << ' ' << detail::fixed(a.mean, 3) << " ± " << detail::fixed(a.std, 3) << " |";
      }
      md << '\n';
    }
    md << '\n';
  }
  for (const auto& [key, cells] : confusion) {
    std::vector<int> tasks, labels;
    for (const auto& [tl, rates] : cells) {
      if (std::find(tasks.begin(), tasks.end(), tl.first) == tasks.end()) tasks.push_back(tl.first);
      if (std::find(labels.begin(), labels.end(), tl.second) == labels.end()) labels.push_back(tl.second);
    }
    std::sort(labels.begin(), labels.end());
    md << "## Confusion matrix (" << key.first << ", " << key.second
       << " steps)\n\nRows: task predicate. Columns: condition label.\n\n| task |";
    for (int l : labels) md << " label " << l << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < labels.size(); ++i) md << "---|";
    md << '\n';
    for (int t : tasks) {
      md << "| " << t << " |";
      for (int l : labels) {
        const auto it = cells.find({t, l});
        md << ' ' << (it == cells.end() ? std::string("-") : detail::fixed(aggregate(it->second).mean, 3)) << " |";
      }
      md << '\n';
    }
    md << '\n';
  }
  const std::string text = md.str();
  detail::ensure_dir(out_dir);
  detail::write_text(fs::path(out_dir) / "report.md", text);
  log << text;
  return text;
}

}  // namespace sdp::harness
