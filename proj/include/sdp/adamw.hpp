#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sdp/errors.hpp"
#include "sdp/param_block.hpp"

namespace sdp {

struct AdamWOptions {
  double lr = 1e-4;
  double weight_decay = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// AdamW with decoupled weight decay:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
class AdamW {
 public:
  AdamW() = default;
  AdamW(Eigen::Index num_params, AdamWOptions options)
      : options_(options),
        m_(Eigen::VectorXd::Zero(num_params)),
        v_(Eigen::VectorXd::Zero(num_params)) {}

  const AdamWOptions& options() const { return options_; }
  std::uint64_t step_count() const { return step_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }

  void restore(std::uint64_t step, Eigen::VectorXd m, Eigen::VectorXd v) {
    if (m.size() != m_.size() || v.size() != v_.size()) {
      throw DataError("AdamW::restore: moment size mismatch");
    }
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
  }

  /// `blocks` is only used to name the offending entry of a non-finite gradient.
  void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads,
            const std::vector<ParamBlock>* blocks = nullptr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
      throw UsageError("AdamW::step: expected " + std::to_string(m_.size()) + " parameters, got " +
                       std::to_string(params.size()) + " params / " + std::to_string(grads.size()) +
                       " grads");
    }
    for (Eigen::Index i = 0; i < grads.size(); ++i) {
      if (!std::isfinite(grads(i))) {
        throw NumericalError("AdamW::step: non-finite gradient at " +
                             (blocks ? describe_parameter(*blocks, i)
                                     : "param[" + std::to_string(i) + "]"));
      }
    }
    ++step_;
    const double b1 = options_.beta1;
    const double b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    m_ = b1 * m_ + (1.0 - b1) * grads;
    v_ = b2 * v_ + (1.0 - b2) * grads.cwiseAbs2();
    const Eigen::ArrayXd m_hat = m_.array() / c1;
    const Eigen::ArrayXd v_hat = v_.array() / c2;
    params.array() -= options_.lr * (m_hat / (v_hat.sqrt() + options_.eps) +
                                     options_.weight_decay * params.array());
  }

 private:
  AdamWOptions options_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::uint64_t step_ = 0;
};

}  // namespace sdp
