#pragma once

// Flat key = value run configuration.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sdp/engine.hpp"
#include "sdp/errors.hpp"
#include "sdp/network.hpp"
#include "sdp/toy_envs.hpp"

namespace sdp::harness {

struct RunConfig {
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<int> tasks = {0, 1, 2};
  int demos_per_task = 100;
  std::uint64_t data_seed = 0;
  int epochs = 500;
  int batch_size = 256;
  int windows_per_demo = 256;
  double lr = 1e-4;
  double weight_decay = 0.1;
  double k_split = 0.25;
  int grid_m = 7;
  ConditioningMode mode = ConditioningMode::kActionConcat;
  std::vector<int> hidden = {128, 128, 128};
  double p_drop = 0.1;
  std::vector<Engine> engines = {Engine::kShortcut};
  std::vector<int> eval_steps = {10, 5, 3, 2, 1};
  int episodes = 100;
  double guidance_weight = 0.0;
  int bench_repeats = 100;
  std::string out_dir = "out";
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_number(const std::string& text, const std::string& key) {
  T v{};
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || p != text.data() + text.size()) {
    throw UsageError("config: bad value '" + text + "' for " + key);
  }
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
  std::vector<T> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_number<T>(item, key));
  if (out.empty()) throw UsageError("config: " + key + " must not be empty");
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, Engine>) {
      out += to_string(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline void set_value(RunConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "seeds") {
    c.seeds = parse_list<std::uint64_t>(value, key);
  } else if (key == "tasks") {
    c.tasks = parse_list<int>(value, key);
  } else if (key == "demos_per_task") {
    c.demos_per_task = parse_number<int>(value, key);
  } else if (key == "data_seed") {
    c.data_seed = parse_number<std::uint64_t>(value, key);
  } else if (key == "epochs") {
    c.epochs = parse_number<int>(value, key);
  } else if (key == "batch_size") {
    c.batch_size = parse_number<int>(value, key);
  } else if (key == "windows_per_demo") {
    c.windows_per_demo = parse_number<int>(value, key);
  } else if (key == "lr") {
    c.lr = parse_number<double>(value, key);
  } else if (key == "weight_decay") {
    c.weight_decay = parse_number<double>(value, key);
  } else if (key == "k_split") {
    c.k_split = parse_number<double>(value, key);
  } else if (key == "grid_m") {
    c.grid_m = parse_number<int>(value, key);
  } else if (key == "mode") {
    c.mode = parse_conditioning_mode(value);
  } else if (key == "hidden") {
    c.hidden = parse_list<int>(value, key);
  } else if (key == "p_drop") {
    c.p_drop = parse_number<double>(value, key);
  } else if (key == "engines") {
    c.engines.clear();
    for (const auto& e : split(value, ',')) c.engines.push_back(parse_engine(e));
  } else if (key == "eval_steps") {
    c.eval_steps = parse_list<int>(value, key);
  } else if (key == "episodes") {
    c.episodes = parse_number<int>(value, key);
  } else if (key == "guidance_weight") {
    c.guidance_weight = parse_number<double>(value, key);
  } else if (key == "bench_repeats") {
    c.bench_repeats = parse_number<int>(value, key);
  } else if (key == "out_dir") {
    if (value.empty()) throw UsageError("config: out_dir must not be empty");
    c.out_dir = value;
  } else {
    throw UsageError("config: unknown key '" + key + "'");
  }
}

inline void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("config: " + what);
  };
  require(!c.seeds.empty(), "seeds must not be empty");
  require(!c.tasks.empty(), "tasks must not be empty");
  for (int t : c.tasks) require(t >= 0 && t < kNumTasks, "task ids must lie in [0, 2]");
  for (std::size_t i = 0; i < c.tasks.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) require(c.tasks[i] != c.tasks[j], "duplicate task id");
  require(c.demos_per_task >= 1, "demos_per_task must be >= 1 (refusing an empty dataset)");
  require(c.epochs >= 1, "epochs must be >= 1");
  require(c.batch_size >= 1, "batch_size must be >= 1");
  require(c.windows_per_demo >= 1, "windows_per_demo must be >= 1");
  require(c.lr > 0.0 && std::isfinite(c.lr), "lr must be positive");
  require(c.weight_decay >= 0.0 && std::isfinite(c.weight_decay), "weight_decay must be >= 0");
  require(c.k_split >= 0.0 && c.k_split <= 1.0, "k_split must lie in [0, 1]");
  require(c.grid_m >= 1 && c.grid_m <= 16, "grid_m must lie in [1, 16]");
  require(!c.hidden.empty(), "hidden must list at least one width");
  for (int w : c.hidden) require(w >= 1 && w <= 4096, "hidden widths must lie in [1, 4096]");
  require(c.p_drop >= 0.0 && c.p_drop <= 1.0, "p_drop must lie in [0, 1]");
  require(!c.engines.empty(), "engines must not be empty");
  require(!c.eval_steps.empty(), "eval_steps must not be empty");
  for (int n : c.eval_steps) require(n >= 1 && n <= (1 << (c.grid_m - 1)), "eval_steps out of range for grid_m");
  require(c.episodes >= 1, "episodes must be >= 1");
  require(c.guidance_weight >= 0.0, "guidance_weight must be >= 0");
  require(c.bench_repeats >= 30, "bench_repeats must be >= 30");
}

inline RunConfig parse_config(std::istream& is, const std::string& name) {
  RunConfig c;
  std::map<std::string, int> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = detail::trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw UsageError(name + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (seen.count(key)) {
      throw UsageError(name + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    seen[key] = lineno;
    try {
      set_value(c, key, value);
    } catch (const UsageError& e) {
      throw UsageError(name + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config: " + path);
  return parse_config(is, path);
}

/// Canonical text of the fields that determine a trained model, excluding
/// epochs so a finished run can be resumed with a larger budget.
inline std::string training_text(const RunConfig& c, Engine engine) {
  using detail::format_double;
  std::string s;
  s += "engine=" + std::string(to_string(engine)) + "\n";
  s += "tasks=" + detail::join(c.tasks) + "\n";
  s += "demos_per_task=" + std::to_string(c.demos_per_task) + "\n";
  s += "data_seed=" + std::to_string(c.data_seed) + "\n";
  s += "batch_size=" + std::to_string(c.batch_size) + "\n";
  s += "windows_per_demo=" + std::to_string(c.windows_per_demo) + "\n";
  s += "lr=" + format_double(c.lr) + "\n";
  s += "weight_decay=" + format_double(c.weight_decay) + "\n";
  s += "k_split=" + format_double(c.k_split) + "\n";
  s += "grid_m=" + std::to_string(c.grid_m) + "\n";
  s += "mode=" + std::string(to_string(c.mode)) + "\n";
  s += "hidden=" + detail::join(c.hidden) + "\n";
  s += "p_drop=" + format_double(c.p_drop) + "\n";
  return s;
}

inline std::uint64_t training_hash(const RunConfig& c, Engine engine) {
  return detail::fnv1a(training_text(c, engine));
}

/// Hash of every field except the seed list and output directory.
inline std::uint64_t config_hash(const RunConfig& c) {
  std::string s = "epochs=" + std::to_string(c.epochs) + "\n";
  for (Engine e : c.engines) s += training_text(c, e);
  s += "eval_steps=" + detail::join(c.eval_steps) + "\n";
  s += "episodes=" + std::to_string(c.episodes) + "\n";
  s += "guidance_weight=" + detail::format_double(c.guidance_weight) + "\n";
  s += "bench_repeats=" + std::to_string(c.bench_repeats) + "\n";
  return detail::fnv1a(s);
}

inline std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sdp::harness
