#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sdp/errors.hpp"
#include "sdp/so3.hpp"

namespace sdp {

/// Width of one flattened pose: rotation vector (3), translation (3), gripper (1).
inline constexpr int kPoseWidth = 7;

struct PoseAction {
  Vec3 r = Vec3::Zero();  // rotation vector, canonical ball
  Vec3 s = Vec3::Zero();  // translation
  double g = 0.0;         // gripper, 0 = open, 1 = closed

  bool operator==(const PoseAction&) const = default;
};

/// Fixed-horizon sequence of poses. Flattening is pose-major, then (r, s, g).
struct ActionChunk {
  std::vector<PoseAction> poses;

  ActionChunk() = default;
  explicit ActionChunk(int horizon) : poses(static_cast<std::size_t>(horizon)) {}

  int horizon() const { return static_cast<int>(poses.size()); }
  int flat_width() const { return horizon() * kPoseWidth; }

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd out(flat_width());
    for (int k = 0; k < horizon(); ++k) {
      const PoseAction& p = poses[static_cast<std::size_t>(k)];
      out.segment<3>(k * kPoseWidth) = p.r;
      out.segment<3>(k * kPoseWidth + 3) = p.s;
      out(k * kPoseWidth + 6) = p.g;
    }
    return out;
  }

  static ActionChunk unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat) {
    if (flat.size() % kPoseWidth != 0) {
      throw DataError("ActionChunk::unflatten: length " + std::to_string(flat.size()) +
                      " is not a multiple of " + std::to_string(kPoseWidth));
    }
    ActionChunk chunk(static_cast<int>(flat.size() / kPoseWidth));
    for (int k = 0; k < chunk.horizon(); ++k) {
      PoseAction& p = chunk.poses[static_cast<std::size_t>(k)];
      p.r = flat.segment<3>(k * kPoseWidth);
      p.s = flat.segment<3>(k * kPoseWidth + 3);
      p.g = flat(k * kPoseWidth + 6);
    }
    return chunk;
  }

  const PoseAction& final_pose() const { return poses.back(); }

  bool operator==(const ActionChunk&) const = default;
};

/// Wraps every rotation triple of a flat chunk vector back into the canonical ball.
inline void wrap_rotations(Eigen::Ref<Eigen::VectorXd> flat) {
  for (Eigen::Index k = 0; k + kPoseWidth <= flat.size(); k += kPoseWidth) {
    const Vec3 r = flat.segment<3>(k);
    flat.segment<3>(k) = so3::wrap_to_ball(r);
  }
}

/// Integer task label; the null flag selects the unconditional embedding row.
struct TaskCondition {
  int task_id = 0;
  bool is_null = false;

  static TaskCondition task(int id) { return {id, false}; }
  static TaskCondition null() { return {0, true}; }

  bool operator==(const TaskCondition&) const = default;
};

struct Demonstration {
  int task_id = 0;
  Eigen::VectorXd observation;
  ActionChunk chunk;

  bool operator==(const Demonstration& o) const {
    return task_id == o.task_id && observation.size() == o.observation.size() &&
           observation == o.observation && chunk == o.chunk;
  }
};

}  // namespace sdp
