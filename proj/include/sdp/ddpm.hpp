#pragma once

// Noise-prediction diffusion baseline: variance schedule, closed-form forward
// noising, the simplified epsilon objective and a deterministic DDIM sampler.
// Rotation log coordinates are treated as plain Euclidean coordinates here.

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sdp/action.hpp"
#include "sdp/errors.hpp"
#include "sdp/network.hpp"
#include "sdp/rng.hpp"
#include "sdp/shortcut.hpp"

namespace sdp {

class NoiseSchedule {
 public:
  NoiseSchedule() = default;

  explicit NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.empty()) throw UsageError("noise schedule: need at least one step");
    alpha_bar_.assign(betas_.size() + 1, 1.0);
    for (std::size_t i = 0; i < betas_.size(); ++i) {
      const double b = betas_[i];
      if (!(b > 0.0 && b < 1.0)) throw UsageError("noise schedule: beta must lie in (0, 1)");
      alpha_bar_[i + 1] = alpha_bar_[i] * (1.0 - b);
    }
  }

  /// betas linearly spaced over [beta_start, beta_end] for t = 1..T.
  static NoiseSchedule linear(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw UsageError("noise schedule: T must be >= 1");
    std::vector<double> b(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
      b[static_cast<std::size_t>(i)] =
          steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * i / (steps - 1);
    }
    return NoiseSchedule(std::move(b));
  }

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(static_cast<std::size_t>(t - 1)); }
  /// Cumulative product of (1 - beta) up to t; alpha_bar(0) == 1.
  double alpha_bar(int t) const { return alpha_bar_.at(static_cast<std::size_t>(t)); }

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_bar_;
};

/// Default baseline schedule: T = 100 with the standard linear betas rescaled
/// by 1000 / T, so that alpha_bar(T) is close to zero.
inline NoiseSchedule default_baseline_schedule(int steps = 100) {
  const double scale = 1000.0 / steps;
  return NoiseSchedule::linear(steps, 1e-4 * scale, 2e-2 * scale);
}

/// x_t = sqrt(alpha_bar) x0 + sqrt(1 - alpha_bar) eps for a given eps.
inline Eigen::VectorXd ddpm_noised(const Eigen::VectorXd& x0, int t, const NoiseSchedule& s,
                                   const Eigen::VectorXd& eps) {
  if (t < 1 || t > s.steps()) throw UsageError("ddpm_forward_noise: t outside [1, T]");
  const double ab = s.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

template <class R>
std::pair<Eigen::VectorXd, Eigen::VectorXd> ddpm_forward_noise(const Eigen::VectorXd& x0, int t,
                                                               const NoiseSchedule& s, R& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd eps(x0.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = normal(rng);
  return {ddpm_noised(x0, t, s, eps), eps};
}

/// Network time input for diffusion step t.
inline double ddpm_time_input(int t, const NoiseSchedule& s) {
  return static_cast<double>(t) / s.steps();
}

/// Uniformly strided sub-schedule, descending: floor(k T / n) for k = n..1.
inline std::vector<int> ddim_timesteps(int num_steps, const NoiseSchedule& s) {
  if (num_steps < 1 || num_steps > s.steps()) {
    throw UsageError("ddim: num_steps must lie in [1, T]");
  }
  std::vector<int> ts;
  for (int k = num_steps; k >= 1; --k) ts.push_back(k * s.steps() / num_steps);
  return ts;
}

/// Deterministic DDIM (eta = 0) starting from x_T drawn from `rng`. The model
/// predicts the injected noise; it is queried with d = 0.
template <VelocityModel M, class R>
Eigen::VectorXd ddim_sample_flat(const M& eps_model, const Eigen::VectorXd& obs, const TaskCondition& cond,
                                 int num_steps, const NoiseSchedule& s, int width, R& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(width);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
  const std::vector<int> ts = ddim_timesteps(num_steps, s);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const int t = ts[i];
    const int prev = i + 1 < ts.size() ? ts[i + 1] : 0;
    const Eigen::VectorXd eps = eps_model.predict(x, obs, cond, ddpm_time_input(t, s), 0.0);
    const double ab = s.alpha_bar(t);
    const double ab_prev = s.alpha_bar(prev);
    const Eigen::VectorXd x0_hat = (x - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
    x = std::sqrt(ab_prev) * x0_hat + std::sqrt(1.0 - ab_prev) * eps;
  }
  return x;
}

/// Epsilon-prediction regression problem (the simplified DDPM objective).
inline RegressionProblem build_ddpm_problem(std::span<const Demonstration> dataset, TrainingStreams& streams,
                                            const BatchOptions& opts, const NoiseSchedule& s) {
  if (dataset.empty()) throw DataError("build_ddpm_problem: dataset is empty");
  if (opts.batch_size < 1) throw UsageError("build_ddpm_problem: batch_size must be >= 1");
  const Eigen::Index aw = dataset.front().chunk.flat_width();
  const Eigen::Index od = dataset.front().observation.size();
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::uniform_int_distribution<int> step(1, s.steps());
  std::normal_distribution<double> normal(0.0, 1.0);

  RegressionProblem p;
  p.num_flow = opts.batch_size;
  p.query.resize(aw, od, opts.batch_size);
  p.targets.resize(aw, opts.batch_size);
  for (int b = 0; b < opts.batch_size; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    const Demonstration& demo = dataset[pick(streams.data)];
    Eigen::VectorXd eps(aw);
    for (Eigen::Index i = 0; i < aw; ++i) eps(i) = normal(streams.noise);
    const int t = step(streams.time);
    p.query.actions.col(b) = ddpm_noised(demo.chunk.flatten(), t, s, eps);
    p.query.obs.col(b) = demo.observation;
    p.query.conds[ub] =
        apply_condition_dropout(TaskCondition::task(demo.task_id), streams.dropout, opts.p_drop);
    p.query.t[ub] = ddpm_time_input(t, s);
    p.query.d[ub] = 0.0;
    p.targets.col(b) = eps;
  }
  return p;
}

}  // namespace sdp
