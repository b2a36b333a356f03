#pragma once

// Shortcut flow-matching objective. Actions live in log coordinates for the
// rotation part, so interpolation, velocity targets and shortcut steps are
// all affine in the flat chunk vector; rotations are re-wrapped into the
// canonical ball after every step.

#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sdp/action.hpp"
#include "sdp/errors.hpp"
#include "sdp/network.hpp"
#include "sdp/rng.hpp"
#include "sdp/so3.hpp"

namespace sdp {

/// Anything that maps (A_t, O, C, t, d) to a flat velocity. PolicyNetwork is
/// the production model; tests plug in analytic fields.
template <class M>
concept VelocityModel = requires(const M& m, const Eigen::VectorXd& a, const Eigen::VectorXd& o,
                                 const TaskCondition& c, double t, double d) {
  { m.predict(a, o, c, t, d) } -> std::convertible_to<Eigen::VectorXd>;
};

template <class M>
concept BatchedModel = requires(const M& m, const Query& q) {
  { m.forward(q) } -> std::convertible_to<Eigen::MatrixXd>;
};

/// Dyadic step sizes {2^-m : m = 0..levels-1}, plus the flow-matching query d = 0.
struct StepSizeGrid {
  int levels = 7;

  double value(int m) const { return std::ldexp(1.0, -m); }
  double finest() const { return value(levels - 1); }
  int max_steps() const { return 1 << (levels - 1); }

  bool admissible(double d) const {
    if (d == 0.0) return true;
    for (int m = 0; m < levels; ++m)
      if (d == value(m)) return true;
    return false;
  }

  /// Numerically nearest grid value (> 0); ties go to the larger step.
  double nearest(double d) const {
    double best = value(0);
    for (int m = 1; m < levels; ++m) {
      if (std::abs(value(m) - d) < std::abs(best - d)) best = value(m);
    }
    return best;
  }

  /// Smallest dyadic step count >= n; the sampler runs this many steps.
  int realized_steps(int n) const {
    if (n < 1 || n > max_steps()) {
      throw UsageError("step budget " + std::to_string(n) + " outside [1, " + std::to_string(max_steps()) + "]");
    }
    int k = 1;
    while (k < n) k *= 2;
    return k;
  }

  /// Step size fed to the network when advancing by d. The finest level is
  /// never a regression output during training, so it is answered by the
  /// instantaneous-velocity query d = 0.
  double conditioning_value(double d) const {
    if (d == 0.0) return 0.0;
    const double g = nearest(d);
    return g == finest() ? 0.0 : g;
  }

  void validate() const {
    if (levels < 2 || levels > 20) throw UsageError("step-size grid needs 2..20 levels");
  }
};

// ---------------------------------------------------------------------------
// Path primitives

template <class R>
ActionChunk sample_noise_chunk(R& rng, int horizon) {
  if (horizon < 1) throw UsageError("sample_noise_chunk: horizon must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionChunk chunk(horizon);
  for (PoseAction& p : chunk.poses) {
    p.r = so3::sample_tangent_gaussian(rng, 1.0);
    p.s = Vec3(normal(rng), normal(rng), normal(rng));
    p.g = normal(rng);
  }
  return chunk;
}

inline void check_same_horizon(const ActionChunk& a, const ActionChunk& b, const char* op) {
  if (a.horizon() != b.horizon()) {
    throw UsageError(std::string(op) + ": horizon mismatch (" + std::to_string(a.horizon()) +
                     " vs " + std::to_string(b.horizon()) + ")");
  }
}

/// A_t = (1 - t) A0 + t A1; for rotations this is the log-coordinate blend
/// whose exponential is exp(t log R1 + (1 - t) log R0).
inline ActionChunk interpolate_chunk(const ActionChunk& a0, const ActionChunk& a1, double t) {
  check_same_horizon(a0, a1, "interpolate_chunk");
  if (!(t >= 0.0 && t <= 1.0)) throw UsageError("interpolate_chunk: t must lie in [0, 1]");
  ActionChunk out(a0.horizon());
  for (std::size_t k = 0; k < out.poses.size(); ++k) {
    const PoseAction& p0 = a0.poses[k];
    const PoseAction& p1 = a1.poses[k];
    out.poses[k].r = t * p1.r + (1.0 - t) * p0.r;
    out.poses[k].s = t * p1.s + (1.0 - t) * p0.s;
    out.poses[k].g = t * p1.g + (1.0 - t) * p0.g;
  }
  return out;
}

/// Constant velocity of the interpolation path: A1 - A0 (log coordinates for rotations).
inline Eigen::VectorXd velocity_target(const ActionChunk& a0, const ActionChunk& a1) {
  check_same_horizon(a0, a1, "velocity_target");
  return a1.flatten() - a0.flatten();
}

/// A + v d with rotations wrapped back into the canonical ball.
inline Eigen::VectorXd shortcut_step(const Eigen::VectorXd& at, const Eigen::VectorXd& v, double d) {
  if (!(d >= 0.0)) throw UsageError("shortcut_step: d must be >= 0");
  if (at.size() != v.size()) throw UsageError("shortcut_step: velocity length mismatch");
  if (d == 0.0) return at;
  Eigen::VectorXd out = at + v * d;
  wrap_rotations(out);
  return out;
}

inline ActionChunk shortcut_step(const ActionChunk& at, const Eigen::VectorXd& v, double d) {
  return ActionChunk::unflatten(shortcut_step(at.flatten(), v, d));
}

/// Bootstrapped target for the doubled step: (s(A_t, t, d) + s(A_{t+d}, t + d, d)) / 2.
template <VelocityModel M>
Eigen::VectorXd self_consistency_target(const M& model, const Eigen::VectorXd& at,
                                        const Eigen::VectorXd& obs, const TaskCondition& cond,
                                        double t, double d, const StepSizeGrid& grid = {}) {
  if (!(d > 0.0)) throw UsageError("self_consistency_target: d must be > 0");
  if (!(t >= 0.0) || t + 2.0 * d > 1.0 + 1e-12) {
    throw UsageError("self_consistency_target: requires t >= 0 and t + 2d <= 1");
  }
  const double dq = grid.conditioning_value(d);
  const Eigen::VectorXd v1 = model.predict(at, obs, cond, t, dq);
  const Eigen::VectorXd next = shortcut_step(at, v1, d);
  const Eigen::VectorXd v2 = model.predict(next, obs, cond, t + d, dq);
  return 0.5 * (v1 + v2);
}

// ---------------------------------------------------------------------------
// Batches

struct FlowRecord {
  ActionChunk a1;
  Eigen::VectorXd obs;
  TaskCondition cond;
  double t = 0.0;
  ActionChunk a0;
};

struct ConsistencyRecord {
  ActionChunk a1;
  Eigen::VectorXd obs;
  TaskCondition cond;
  double t = 0.0;
  ActionChunk a0;
  double d = 0.0;
};

struct ShortcutBatch {
  std::vector<FlowRecord> flow;
  std::vector<ConsistencyRecord> consistency;

  std::size_t size() const { return flow.size() + consistency.size(); }
};

struct BatchOptions {
  int batch_size = 256;
  double consistency_fraction = 0.25;  // k
  double p_drop = 0.1;
};

/// With probability p_drop, replaces the condition by the null token.
template <class R>
TaskCondition apply_condition_dropout(const TaskCondition& c, R& rng, double p_drop) {
  if (!(p_drop >= 0.0 && p_drop <= 1.0)) throw UsageError("condition dropout: p_drop must lie in [0, 1]");
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < p_drop) return TaskCondition{c.task_id, true};
  return c;
}

inline int consistency_count(int batch_size, double k) {
  return static_cast<int>(std::lround(k * batch_size));
}

/// Samples a training minibatch. Each purpose draws from its own stream:
/// data order, noise, t, step level, and condition dropout.
inline ShortcutBatch build_batch(std::span<const Demonstration> dataset, TrainingStreams& streams,
                                 const BatchOptions& opts, const StepSizeGrid& grid) {
  if (dataset.empty()) throw DataError("build_batch: dataset is empty");
  if (opts.batch_size < 1) throw UsageError("build_batch: batch_size must be >= 1");
  if (!(opts.consistency_fraction >= 0.0 && opts.consistency_fraction <= 1.0)) {
    throw UsageError("build_batch: consistency fraction must lie in [0, 1]");
  }
  grid.validate();
  const int n_cons = consistency_count(opts.batch_size, opts.consistency_fraction);
  const int n_flow = opts.batch_size - n_cons;

  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> level(1, grid.levels - 1);

  auto draw = [&](auto& rec) {
    const Demonstration& demo = dataset[pick(streams.data)];
    rec.a1 = demo.chunk;
    rec.obs = demo.observation;
    rec.cond = apply_condition_dropout(TaskCondition::task(demo.task_id), streams.dropout, opts.p_drop);
    rec.a0 = sample_noise_chunk(streams.noise, demo.chunk.horizon());
  };

  ShortcutBatch batch;
  batch.flow.resize(static_cast<std::size_t>(n_flow));
  batch.consistency.resize(static_cast<std::size_t>(n_cons));
  for (FlowRecord& rec : batch.flow) {
    draw(rec);
    rec.t = unit(streams.time);
  }
  for (ConsistencyRecord& rec : batch.consistency) {
    draw(rec);
    const int m = level(streams.step);
    rec.d = grid.value(m);
    // t = j d with j in [0, 2^m - 2] so that t + 2d <= 1.
    const int j = std::uniform_int_distribution<int>(0, (1 << m) - 2)(streams.time);
    rec.t = j * rec.d;
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Loss

/// Regression problem derived from a batch: one network query per record and
/// the (gradient-stopped) target it is regressed onto.
struct RegressionProblem {
  Query query;
  Eigen::MatrixXd targets;  // action_width x B
  Eigen::Index num_flow = 0;
};

namespace detail {

template <class M>
Eigen::MatrixXd evaluate(const M& model, const Query& q) {
  if constexpr (BatchedModel<M>) {
    return model.forward(q);
  } else {
    Eigen::MatrixXd out(q.actions.rows(), q.size());
    for (Eigen::Index b = 0; b < q.size(); ++b) {
      const auto ub = static_cast<std::size_t>(b);
      out.col(b) = model.predict(q.actions.col(b), q.obs.col(b), q.conds[ub], q.t[ub], q.d[ub]);
    }
    return out;
  }
}

}  // namespace detail

template <VelocityModel M>
RegressionProblem make_regression_problem(const M& model, const ShortcutBatch& batch,
                                          const StepSizeGrid& grid = {}) {
  if (batch.size() == 0) throw UsageError("shortcut loss: empty batch");
  const ActionChunk& ref = batch.flow.empty() ? batch.consistency.front().a1 : batch.flow.front().a1;
  const Eigen::Index aw = ref.flat_width();
  const Eigen::Index od = batch.flow.empty() ? batch.consistency.front().obs.size()
                                             : batch.flow.front().obs.size();
  const auto n_flow = static_cast<Eigen::Index>(batch.flow.size());
  const auto n_cons = static_cast<Eigen::Index>(batch.consistency.size());

  RegressionProblem p;
  p.num_flow = n_flow;
  p.query.resize(aw, od, n_flow + n_cons);
  p.targets.resize(aw, n_flow + n_cons);

  for (Eigen::Index i = 0; i < n_flow; ++i) {
    const FlowRecord& r = batch.flow[static_cast<std::size_t>(i)];
    const Eigen::VectorXd x0 = r.a0.flatten();
    const Eigen::VectorXd x1 = r.a1.flatten();
    p.query.actions.col(i) = (1.0 - r.t) * x0 + r.t * x1;
    p.query.obs.col(i) = r.obs;
    p.query.conds[static_cast<std::size_t>(i)] = r.cond;
    p.query.t[static_cast<std::size_t>(i)] = r.t;
    p.query.d[static_cast<std::size_t>(i)] = 0.0;
    p.targets.col(i) = x1 - x0;
  }
  if (n_cons == 0) return p;

  // Two batched half-step evaluations produce the bootstrap targets.
  Query half;
  half.resize(aw, od, n_cons);
  for (Eigen::Index i = 0; i < n_cons; ++i) {
    const ConsistencyRecord& r = batch.consistency[static_cast<std::size_t>(i)];
    if (!(r.d > 0.0) || r.t + 2.0 * r.d > 1.0 + 1e-12) {
      throw UsageError("shortcut loss: consistency record " + std::to_string(n_flow + i) +
                       " violates t + 2d <= 1");
    }
    const auto ui = static_cast<std::size_t>(i);
    half.actions.col(i) = (1.0 - r.t) * r.a0.flatten() + r.t * r.a1.flatten();
    half.obs.col(i) = r.obs;
    half.conds[ui] = r.cond;
    half.t[ui] = r.t;
    half.d[ui] = grid.conditioning_value(r.d);

    const Eigen::Index col = n_flow + i;
    const auto uc = static_cast<std::size_t>(col);
    p.query.actions.col(col) = half.actions.col(i);
    p.query.obs.col(col) = r.obs;
    p.query.conds[uc] = r.cond;
    p.query.t[uc] = r.t;
    p.query.d[uc] = grid.conditioning_value(2.0 * r.d);
  }
  const Eigen::MatrixXd v1 = detail::evaluate(model, half);
  for (Eigen::Index i = 0; i < n_cons; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double d = batch.consistency[ui].d;
    half.actions.col(i) = shortcut_step(Eigen::VectorXd(half.actions.col(i)), Eigen::VectorXd(v1.col(i)), d);
    half.t[ui] += d;
  }
  const Eigen::MatrixXd v2 = detail::evaluate(model, half);
  p.targets.rightCols(n_cons) = 0.5 * (v1 + v2);
  return p;
}

struct LossResult {
  double loss = 0.0;
  double flow_loss = 0.0;         // mean over flow records
  double consistency_loss = 0.0;  // mean over consistency records
  Eigen::VectorXd grad;
};

namespace detail {

/// Per-record mean squared error, then mean over records. Fills d(loss)/d(pred).
inline LossResult mse_loss(const Eigen::MatrixXd& pred, const RegressionProblem& p,
                           Eigen::MatrixXd* dpred) {
  const Eigen::MatrixXd resid = pred - p.targets;
  const Eigen::Index batch = resid.cols();
  const auto width = static_cast<double>(resid.rows());
  const Eigen::VectorXd per_record = resid.colwise().squaredNorm().transpose() / width;
  for (Eigen::Index i = 0; i < batch; ++i) {
    if (!std::isfinite(per_record(i))) {
      throw NumericalError("shortcut loss: non-finite loss at record " + std::to_string(i));
    }
  }
  LossResult r;
  r.loss = per_record.mean();
  const Eigen::Index nf = p.num_flow;
  const Eigen::Index nc = batch - nf;
  if (nf > 0) r.flow_loss = per_record.head(nf).mean();
  if (nc > 0) r.consistency_loss = per_record.tail(nc).mean();
  if (dpred) *dpred = resid * (2.0 / (width * static_cast<double>(batch)));
  return r;
}

}  // namespace detail

/// Loss and exact parameter gradients for a fixed regression problem. The
/// targets are constants, so finite differences of this function check the
/// gradient of the full objective.
inline LossResult regression_loss(const PolicyNetwork& net, const RegressionProblem& p) {
  Tape tape;
  const Eigen::MatrixXd pred = net.forward(p.query, &tape);
  Eigen::MatrixXd dpred;
  LossResult r = detail::mse_loss(pred, p, &dpred);
  r.grad = net.backward(tape, dpred);
  return r;
}

inline double regression_loss_value(const PolicyNetwork& net, const RegressionProblem& p) {
  return detail::mse_loss(net.forward(p.query), p, nullptr).loss;
}

/// Flow-matching plus self-consistency loss with gradients.
inline LossResult shortcut_loss(const PolicyNetwork& net, const ShortcutBatch& batch,
                                const StepSizeGrid& grid = {}) {
  return regression_loss(net, make_regression_problem(net, batch, grid));
}

/// Loss value for any velocity model (no gradients).
template <VelocityModel M>
LossResult shortcut_loss_value(const M& model, const ShortcutBatch& batch, const StepSizeGrid& grid = {}) {
  const RegressionProblem p = make_regression_problem(model, batch, grid);
  return detail::mse_loss(detail::evaluate(model, p.query), p, nullptr);
}

}  // namespace sdp
