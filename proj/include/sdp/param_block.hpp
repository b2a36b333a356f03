#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace sdp {

/// A named matrix slice of a flat parameter vector (column-major storage).
struct ParamBlock {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
};

/// "layer1.weight[3,7]" style description of a flat parameter index.
inline std::string describe_parameter(const std::vector<ParamBlock>& blocks, Eigen::Index flat) {
  for (const ParamBlock& b : blocks) {
    if (flat >= b.offset && flat < b.offset + b.size()) {
      const Eigen::Index local = flat - b.offset;
      return b.name + "[" + std::to_string(local % b.rows) + "," + std::to_string(local / b.rows) + "]";
    }
  }
  return "param[" + std::to_string(flat) + "]";
}

}  // namespace sdp
