#pragma once

// Scripted toy manipulation tasks in the unit workspace cube.
//
//   task 0 "reorient"   hold object 0 in place and rotate it upright
//   task 1 "reach-lift" reach object 1 from the home pose, lift it 0.2 in z
//   task 2 "place"      carry object 2 onto object 0 (0.1 above it), keeping
//                       object 2's orientation
//
// Objects 3 and 4 are distractors.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "sdp/action.hpp"
#include "sdp/errors.hpp"
#include "sdp/rng.hpp"
#include "sdp/so3.hpp"

namespace sdp {

inline constexpr int kHorizon = 8;
inline constexpr int kNumTasks = 3;
inline constexpr int kNumTaskObjects = 3;
inline constexpr int kNumDistractors = 2;
inline constexpr int kNumObjects = kNumTaskObjects + kNumDistractors;
inline constexpr int kObsDim = kNumObjects * 7;
inline constexpr double kMinSeparation = 0.1;
inline constexpr int kMaxPlacementAttempts = 1000;
inline constexpr double kLiftHeight = 0.2;
inline constexpr double kStackHeight = 0.1;
inline constexpr double kOrientationSigma = 0.6;

inline const Vec3 kHomePosition{0.5, 0.5, 0.8};

struct Scene {
  std::vector<Vec3> positions;
  std::vector<Mat3> orientations;
  int distractor_count = kNumDistractors;
  std::array<int, kNumTaskObjects> task_objects{0, 1, 2};
  std::uint64_t seed = 0;

  int object_count() const { return static_cast<int>(positions.size()); }
  bool is_distractor(int i) const {
    return std::find(task_objects.begin(), task_objects.end(), i) == task_objects.end();
  }
};

struct TaskSpec {
  int task_id = 0;
  double eps_s = 0.05;  // translation tolerance, workspace units
  double eps_r = 0.1;   // rotation tolerance, radians
  std::string expert;
};

inline TaskSpec task_spec(int task_id) {
  static const char* names[kNumTasks] = {"reorient", "reach-lift", "place"};
  if (task_id < 0 || task_id >= kNumTasks) {
    throw UsageError("unknown task id " + std::to_string(task_id));
  }
  return TaskSpec{task_id, 0.05, 0.1, names[task_id]};
}

/// Scene generated entirely from `seed`.
inline Scene make_scene_from_seed(std::uint64_t seed,
                                  int distractors = kNumDistractors,
                                  double min_separation = kMinSeparation) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Scene scene;
  scene.seed = seed;
  scene.distractor_count = distractors;
  const int n = kNumTaskObjects + distractors;
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const Vec3 p(unit(rng), unit(rng), unit(rng));
      placed = std::all_of(scene.positions.begin(), scene.positions.end(),
                           [&](const Vec3& q) { return (p - q).norm() >= min_separation; });
      if (placed) scene.positions.push_back(p);
    }
    if (!placed) {
      throw DataError("make_scene: could not place object " + std::to_string(i) + " after " +
                      std::to_string(kMaxPlacementAttempts) + " attempts (workspace too crowded)");
    }
  }
  for (int i = 0; i < n; ++i) {
    scene.orientations.push_back(so3::exp_map(so3::sample_tangent_gaussian(rng, kOrientationSigma)));
  }
  return scene;
}

inline Scene make_scene(Rng& rng) { return make_scene_from_seed(rng()); }

/// Per object: position (3), orientation as rotation vector (3), distractor flag (1).
inline Eigen::VectorXd observation(const Scene& scene) {
  Eigen::VectorXd obs(scene.object_count() * 7);
  for (int i = 0; i < scene.object_count(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    obs.segment<3>(7 * i) = scene.positions[ui];
    obs.segment<3>(7 * i + 3) = so3::log_map(scene.orientations[ui]);
    obs(7 * i + 6) = scene.is_distractor(i) ? 1.0 : 0.0;
  }
  return obs;
}

namespace detail {

inline void require_objects(const Scene& scene, int task_id) {
  if (scene.object_count() < kNumTaskObjects) {
    throw DataError("task " + std::to_string(task_id) + ": scene is missing task objects");
  }
}

inline const Vec3& pos(const Scene& s, int slot) {
  return s.positions[static_cast<std::size_t>(s.task_objects[static_cast<std::size_t>(slot)])];
}
inline const Mat3& rot(const Scene& s, int slot) {
  return s.orientations[static_cast<std::size_t>(s.task_objects[static_cast<std::size_t>(slot)])];
}

}  // namespace detail

/// Goal pose against which the task's success predicate is checked.
inline PoseAction goal_pose(const TaskSpec& task, const Scene& scene) {
  detail::require_objects(scene, task.task_id);
  PoseAction goal;
  goal.g = 1.0;
  switch (task.task_id) {
    case 0:
      goal.s = detail::pos(scene, 0);
      break;
    case 1:
      goal.s = detail::pos(scene, 1) + Vec3(0.0, 0.0, kLiftHeight);
      break;
    case 2:
      goal.s = detail::pos(scene, 0) + Vec3(0.0, 0.0, kStackHeight);
      goal.r = so3::log_map(detail::rot(scene, 2));
      break;
    default:
      throw UsageError("unknown task id " + std::to_string(task.task_id));
  }
  return goal;
}

/// Scripted demonstration for the task in this scene.
inline ActionChunk expert_chunk(const TaskSpec& task, const Scene& scene, int horizon = kHorizon) {
  detail::require_objects(scene, task.task_id);
  if (horizon < 2) throw UsageError("expert_chunk: horizon must be >= 2");
  ActionChunk chunk(horizon);
  const int half = horizon / 2;
  for (int k = 0; k < horizon; ++k) {
    PoseAction& p = chunk.poses[static_cast<std::size_t>(k)];
    const double alpha = static_cast<double>(k) / (horizon - 1);
    p.g = k < half - 1 ? 0.0 : 1.0;  // open, close on contact, hold
    switch (task.task_id) {
      case 0:
        p.s = detail::pos(scene, 0);
        p.r = so3::log_map(so3::interp_log(detail::rot(scene, 0), Mat3::Identity(), alpha));
        break;
      case 1: {
        const Vec3& obj = detail::pos(scene, 1);
        if (k < half) {
          const double a = static_cast<double>(k + 1) / half;
          p.s = kHomePosition + a * (obj - kHomePosition);
        } else {
          const double b = static_cast<double>(k - half + 1) / (horizon - half);
          p.s = obj + Vec3(0.0, 0.0, b * kLiftHeight);
        }
        break;
      }
      case 2: {
        const Vec3& from = detail::pos(scene, 2);
        const Vec3 to = detail::pos(scene, 0) + Vec3(0.0, 0.0, kStackHeight);
        p.s = from + alpha * (to - from);
        p.r = so3::log_map(detail::rot(scene, 2));
        break;
      }
      default:
        throw UsageError("unknown task id " + std::to_string(task.task_id));
    }
  }
  return chunk;
}

/// Closed thresholds: translation error <= eps_s and rotation error <= eps_r.
inline bool success(const TaskSpec& task, const PoseAction& final_pose, const Scene& scene) {
  const PoseAction goal = goal_pose(task, scene);
  const double ds = (final_pose.s - goal.s).norm();
  const double dr = so3::geodesic_distance(so3::exp_map(final_pose.r), so3::exp_map(goal.r));
  return ds <= task.eps_s && dr <= task.eps_r;
}

// ---------------------------------------------------------------------------
// Demonstrations

inline std::vector<Demonstration> make_demonstrations(int task_id, int count, std::uint64_t seed) {
  const TaskSpec spec = task_spec(task_id);
  Rng rng = make_stream(mix_seed(seed, static_cast<std::uint64_t>(task_id)), Stream::kScene);
  std::vector<Demonstration> demos;
  demos.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    const Scene scene = make_scene(rng);
    demos.push_back({task_id, observation(scene), expert_chunk(spec, scene)});
  }
  return demos;
}

struct DatasetFile {
  int horizon = kHorizon;
  int obs_dim = kObsDim;
  std::vector<Demonstration> demos;
};

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

inline std::vector<double> parse_doubles(std::string_view field, const std::string& where) {
  std::vector<double> out;
  const char* p = field.data();
  const char* end = p + field.size();
  while (p < end) {
    while (p < end && *p == ' ') ++p;
    if (p == end) break;
    double v = 0.0;
    const auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() || (next < end && *next != ' ')) {
      throw DataError(where + ": malformed number");
    }
    out.push_back(v);
    p = next;
  }
  return out;
}

inline int parse_header_int(std::string_view token, std::string_view key, const std::string& where) {
  if (token.substr(0, key.size()) != key) throw DataError(where + ": expected '" + std::string(key) + "'");
  int v = 0;
  const auto body = token.substr(key.size());
  const auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
  if (ec != std::errc() || p != body.data() + body.size() || v < 0) {
    throw DataError(where + ": bad value for " + std::string(key));
  }
  return v;
}

}  // namespace detail

/// Line-record text format:
///   SDPDATA v1 H=<int> obs_dim=<int>
///   task_id|obs floats|chunk floats (H groups of r1 r2 r3 s1 s2 s3 g)
inline std::string format_dataset(const std::vector<Demonstration>& demos, int horizon = kHorizon,
                                  int obs_dim = kObsDim) {
  if (!demos.empty()) {
    horizon = demos.front().chunk.horizon();
    obs_dim = static_cast<int>(demos.front().observation.size());
  }
  std::string out = "SDPDATA v1 H=" + std::to_string(horizon) + " obs_dim=" + std::to_string(obs_dim) + "\n";
  for (const Demonstration& d : demos) {
    if (d.chunk.horizon() != horizon || d.observation.size() != obs_dim) {
      throw DataError("write_dataset: demonstrations disagree on horizon or obs_dim");
    }
    out += std::to_string(d.task_id);
    out += '|';
    for (Eigen::Index i = 0; i < d.observation.size(); ++i) {
      if (i) out += ' ';
      detail::append_double(out, d.observation(i));
    }
    out += '|';
    const Eigen::VectorXd flat = d.chunk.flatten();
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
      if (i) out += ' ';
      detail::append_double(out, flat(i));
    }
    out += '\n';
  }
  return out;
}

inline void write_dataset(const std::string& path, const std::vector<Demonstration>& demos,
                          int horizon = kHorizon, int obs_dim = kObsDim) {
  const std::string text = format_dataset(demos, horizon, obs_dim);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open dataset for writing: " + path);
  os << text;
  if (!os) throw DataError("failed writing dataset: " + path);
}

inline DatasetFile parse_dataset(std::istream& is, const std::string& name) {
  std::string line;
  if (!std::getline(is, line)) throw DataError(name + ":1: missing header");
  DatasetFile file;
  {
    std::istringstream hs(line);
    std::string magic, version, h, od, extra;
    hs >> magic >> version >> h >> od;
    if (magic != "SDPDATA") throw DataError(name + ":1: not a dataset file");
    if (version != "v1") throw DataError(name + ":1: unsupported version '" + version + "'");
    if (hs >> extra) throw DataError(name + ":1: trailing header fields");
    file.horizon = detail::parse_header_int(h, "H=", name + ":1");
    file.obs_dim = detail::parse_header_int(od, "obs_dim=", name + ":1");
    if (file.horizon < 1) throw DataError(name + ":1: H must be >= 1");
  }
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = name + ":" + std::to_string(lineno);
    if (line.empty()) throw DataError(where + ": empty record");
    const auto bar1 = line.find('|');
    const auto bar2 = bar1 == std::string::npos ? bar1 : line.find('|', bar1 + 1);
    if (bar2 == std::string::npos || line.find('|', bar2 + 1) != std::string::npos) {
      throw DataError(where + ": expected 3 '|'-separated fields");
    }
    Demonstration demo;
    const std::string_view view(line);
    const auto id_field = view.substr(0, bar1);
    const auto [p, ec] = std::from_chars(id_field.data(), id_field.data() + id_field.size(), demo.task_id);
    if (ec != std::errc() || p != id_field.data() + id_field.size() || demo.task_id < 0) {
      throw DataError(where + ": bad task id");
    }
    const auto obs = detail::parse_doubles(view.substr(bar1 + 1, bar2 - bar1 - 1), where);
    const auto act = detail::parse_doubles(view.substr(bar2 + 1), where);
    if (static_cast<int>(obs.size()) != file.obs_dim) {
      throw DataError(where + ": expected " + std::to_string(file.obs_dim) + " observation values, got " +
                      std::to_string(obs.size()));
    }
    if (static_cast<int>(act.size()) != file.horizon * kPoseWidth) {
      throw DataError(where + ": expected " + std::to_string(file.horizon * kPoseWidth) +
                      " action values, got " + std::to_string(act.size()));
    }
    demo.observation = Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
    demo.chunk = ActionChunk::unflatten(
        Eigen::Map<const Eigen::VectorXd>(act.data(), static_cast<Eigen::Index>(act.size())));
    file.demos.push_back(std::move(demo));
  }
  return file;
}

inline DatasetFile read_dataset_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open dataset: " + path);
  return parse_dataset(is, path);
}

inline std::vector<Demonstration> read_dataset(const std::string& path) {
  return read_dataset_file(path).demos;
}

// ---------------------------------------------------------------------------
// Evaluation

/// A policy maps (scene, observation, condition, rng) to an action chunk.
template <class P>
concept Policy = requires(const P& p, const Scene& s, const Eigen::VectorXd& o, const TaskCondition& c, Rng& r) {
  { p(s, o, c, r) } -> std::convertible_to<ActionChunk>;
};

struct ExpertPolicy {
  ActionChunk operator()(const Scene& s, const Eigen::VectorXd&, const TaskCondition& c, Rng&) const {
    return expert_chunk(task_spec(c.task_id), s);
  }
};

struct NoisePolicy {
  int horizon = kHorizon;
  ActionChunk operator()(const Scene&, const Eigen::VectorXd&, const TaskCondition&, Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    ActionChunk chunk(horizon);
    for (PoseAction& p : chunk.poses) {
      p.r = so3::sample_tangent_gaussian(rng, 1.0);
      p.s = Vec3(normal(rng), normal(rng), normal(rng));
      p.g = normal(rng);
    }
    return chunk;
  }
};

struct EvalResult {
  int successes = 0;
  int episodes = 0;
  double rate() const { return episodes ? static_cast<double>(successes) / episodes : 0.0; }
};

/// Open-loop evaluation: each episode draws a fresh scene, generates one chunk
/// with condition `label` and scores its final pose against `task`. Episode e
/// uses its own random stream, so results do not depend on `threads`.
template <Policy P>
EvalResult evaluate_policy(const P& policy, const TaskSpec& task, int episodes, std::uint64_t seed,
                           int label, int threads = 1) {
  if (episodes < 1) throw UsageError("evaluate_policy: episodes must be >= 1");
  std::vector<char> ok(static_cast<std::size_t>(episodes), 0);
  auto run = [&](int begin, int end) {
    for (int e = begin; e < end; ++e) {
      Rng rng = make_stream(mix_seed(seed, static_cast<std::uint64_t>(e)), Stream::kEval);
      const Scene scene = make_scene(rng);
      const ActionChunk chunk = policy(scene, observation(scene), TaskCondition::task(label), rng);
      ok[static_cast<std::size_t>(e)] = success(task, chunk.final_pose(), scene) ? 1 : 0;
    }
  };
  threads = std::clamp(threads, 1, episodes);
  if (threads == 1) {
    run(0, episodes);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    {
      std::vector<std::jthread> pool;
      for (int i = 0; i < threads; ++i) {
        pool.emplace_back([&, i] {
          try {
            run(episodes * i / threads, episodes * (i + 1) / threads);
          } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  EvalResult r;
  r.episodes = episodes;
  for (char c : ok) r.successes += c;
  return r;
}

template <Policy P>
EvalResult evaluate_policy(const P& policy, const TaskSpec& task, int episodes, std::uint64_t seed) {
  return evaluate_policy(policy, task, episodes, seed, task.task_id);
}

}  // namespace sdp
