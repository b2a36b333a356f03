#pragma once

// Glue between the toy environments and a trained network: the fixed
// workspace normalization and a Policy adaptor that samples chunks.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "sdp/action.hpp"
#include "sdp/ddpm.hpp"
#include "sdp/network.hpp"
#include "sdp/sampler.hpp"
#include "sdp/shortcut.hpp"
#include "sdp/toy_envs.hpp"

namespace sdp {

/// Affine map x -> scale * (x - center) applied to observations,
/// translations and the gripper. Rotation log coordinates pass through.
struct WorkspaceNormalizer {
  double center = 0.5;
  double scale = 2.0;

  Eigen::VectorXd observation(const Eigen::VectorXd& obs) const {
    return (scale * (obs.array() - center)).matrix();
  }

  ActionChunk to_model(ActionChunk chunk) const {
    for (PoseAction& p : chunk.poses) {
      p.s = (scale * (p.s.array() - center)).matrix();
      p.g = scale * (p.g - center);
    }
    return chunk;
  }

  ActionChunk to_workspace(ActionChunk chunk) const {
    for (PoseAction& p : chunk.poses) {
      p.s = (p.s.array() / scale + center).matrix();
      p.g = p.g / scale + center;
    }
    return chunk;
  }

  Demonstration to_model(const Demonstration& d) const {
    return {d.task_id, observation(d.observation), to_model(d.chunk)};
  }

  std::vector<Demonstration> to_model(std::span<const Demonstration> data) const {
    std::vector<Demonstration> out;
    out.reserve(data.size());
    for (const Demonstration& d : data) out.push_back(to_model(d));
    return out;
  }
};

/// Samples one chunk per call from a trained network with either engine.
struct NetworkPolicy {
  const PolicyNetwork* net = nullptr;
  SamplerConfig sampler;
  StepSizeGrid grid;
  NoiseSchedule schedule = default_baseline_schedule();
  WorkspaceNormalizer normalizer;

  ActionChunk operator()(const Scene&, const Eigen::VectorXd& obs, const TaskCondition& cond, Rng& rng) const {
    if (!net) throw UsageError("NetworkPolicy: no network");
    const SampledChunk c = sample_chunk(*net, normalizer.observation(obs), cond, sampler, grid, schedule, rng);
    return normalizer.to_workspace(c.chunk);
  }
};

}  // namespace sdp
