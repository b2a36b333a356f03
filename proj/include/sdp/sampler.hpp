#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sdp/action.hpp"
#include "sdp/ddpm.hpp"
#include "sdp/engine.hpp"
#include "sdp/errors.hpp"
#include "sdp/shortcut.hpp"
#include "sdp/so3.hpp"

namespace sdp {

struct SamplerConfig {
  int num_steps = 1;
  double guidance_weight = 0.0;
  Engine engine = Engine::kShortcut;
  int horizon = 8;
};

/// A generated chunk plus its rotations exported to SO(3).
struct SampledChunk {
  ActionChunk chunk;
  std::vector<Mat3> rotations;
};

inline SampledChunk export_chunk(Eigen::VectorXd flat) {
  if (!flat.allFinite()) throw NumericalError("sampler: generated chunk is not finite");
  wrap_rotations(flat);
  SampledChunk out{ActionChunk::unflatten(flat), {}};
  out.rotations.reserve(out.chunk.poses.size());
  for (const PoseAction& p : out.chunk.poses) out.rotations.push_back(so3::exp_map(p.r));
  return out;
}

/// Classifier-free combination (1 + w) s(C) - w s(null). With w = 0 only the
/// conditional branch is evaluated.
template <VelocityModel M>
Eigen::VectorXd guided_velocity(const M& model, const Eigen::VectorXd& at, const Eigen::VectorXd& obs,
                                const TaskCondition& cond, double t, double d, double w) {
  if (!(w >= 0.0)) throw UsageError("guided_velocity: guidance weight must be >= 0");
  Eigen::VectorXd v = model.predict(at, obs, cond, t, d);
  if (w == 0.0) return v;
  const Eigen::VectorXd u = model.predict(at, obs, TaskCondition{cond.task_id, true}, t, d);
  return (1.0 + w) * v - w * u;
}

/// Few-step shortcut generation. A budget of n steps is rounded up to the
/// next dyadic count n' and run as n' steps of d = 1/n' from t = 0 to 1, so
/// every query lands on the training grid.
template <VelocityModel M, class R>
SampledChunk generate(const M& model, const Eigen::VectorXd& obs, const TaskCondition& cond,
                      const SamplerConfig& cfg, const StepSizeGrid& grid, R& rng) {
  if (cfg.num_steps < 1) throw UsageError("generate: num_steps must be >= 1");
  const int steps = grid.realized_steps(cfg.num_steps);
  Eigen::VectorXd a = sample_noise_chunk(rng, cfg.horizon).flatten();
  const double d = 1.0 / steps;
  const double dq = grid.conditioning_value(d);
  for (int i = 0; i < steps; ++i) {
    const Eigen::VectorXd v = guided_velocity(model, a, obs, cond, i * d, dq, cfg.guidance_weight);
    if (!v.allFinite()) throw NumericalError("generate: model produced a non-finite velocity");
    a = shortcut_step(a, v, d);
  }
  return export_chunk(std::move(a));
}

/// DDIM baseline generation with the same flattening and SO(3) export.
template <VelocityModel M, class R>
SampledChunk ddim_sample(const M& eps_model, const Eigen::VectorXd& obs, const TaskCondition& cond,
                         int num_steps, const NoiseSchedule& schedule, int horizon, R& rng) {
  return export_chunk(ddim_sample_flat(eps_model, obs, cond, num_steps, schedule, horizon * kPoseWidth, rng));
}

/// Dispatches on cfg.engine.
template <VelocityModel M, class R>
SampledChunk sample_chunk(const M& model, const Eigen::VectorXd& obs, const TaskCondition& cond,
                          const SamplerConfig& cfg, const StepSizeGrid& grid, const NoiseSchedule& schedule,
                          R& rng) {
  if (cfg.engine == Engine::kShortcut) return generate(model, obs, cond, cfg, grid, rng);
  return ddim_sample(model, obs, cond, cfg.num_steps, schedule, cfg.horizon, rng);
}

// ---------------------------------------------------------------------------
// Timing

struct LatencyStats {
  double median_ms = 0.0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  int repeats = 0;
};

inline constexpr int kMinTimingRepeats = 30;
inline constexpr int kTimingWarmup = 5;

/// Wall-clock statistics of `fn` over `repeats` calls after kTimingWarmup
/// untimed warmup calls.
inline LatencyStats time_calls(const std::function<void()>& fn, int repeats) {
  if (repeats < kMinTimingRepeats) {
    throw UsageError("timing: repeats must be >= " + std::to_string(kMinTimingRepeats));
  }
  for (int i = 0; i < kTimingWarmup; ++i) fn();
  std::vector<double> ms(static_cast<std::size_t>(repeats));
  for (double& m : ms) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    m = std::chrono::duration<double, std::milli>(stop - start).count();
  }
  LatencyStats s;
  s.repeats = repeats;
  double sum = 0.0;
  for (double m : ms) sum += m;
  s.mean_ms = sum / repeats;
  double var = 0.0;
  for (double m : ms) var += (m - s.mean_ms) * (m - s.mean_ms);
  s.std_ms = std::sqrt(var / repeats);
  std::sort(ms.begin(), ms.end());
  const auto n = ms.size();
  s.median_ms = n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
  return s;
}

/// Latency of generating one chunk with the configured engine and step count.
template <VelocityModel M>
LatencyStats time_inference(const M& model, const Eigen::VectorXd& obs, const TaskCondition& cond,
                            const SamplerConfig& cfg, int repeats, const StepSizeGrid& grid = {},
                            const NoiseSchedule& schedule = default_baseline_schedule()) {
  Rng rng(12345);
  volatile double sink = 0.0;
  return time_calls(
      [&] {
        const SampledChunk c = sample_chunk(model, obs, cond, cfg, grid, schedule, rng);
        sink = sink + c.chunk.final_pose().s.x();
      },
      repeats);
}

}  // namespace sdp
