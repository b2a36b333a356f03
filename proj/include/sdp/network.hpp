#pragma once

// Conditional velocity network with exact reverse-mode gradients.
//
// The trunk is an MLP over the action chunk, the observation and (in the
// concat modes) the task embedding. The time and step-size embeddings, plus
// the task embedding in FiLM mode, modulate every hidden layer as
// gamma * act(z) + beta. A linear skip maps the trunk input straight to the
// output.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sdp/action.hpp"
#include "sdp/errors.hpp"
#include "sdp/param_block.hpp"
#include "sdp/rng.hpp"

namespace sdp {

enum class ConditioningMode { kActionConcat, kObsConcat, kFilm };
enum class Activation { kSilu, kTanh };

inline std::string_view to_string(ConditioningMode m) {
  switch (m) {
    case ConditioningMode::kActionConcat: return "action-concat";
    case ConditioningMode::kObsConcat: return "obs-concat";
    case ConditioningMode::kFilm: return "film";
  }
  return "?";
}

inline ConditioningMode parse_conditioning_mode(std::string_view s) {
  if (s == "action-concat") return ConditioningMode::kActionConcat;
  if (s == "obs-concat") return ConditioningMode::kObsConcat;
  if (s == "film") return ConditioningMode::kFilm;
  throw UsageError("unknown conditioning mode '" + std::string(s) + "'");
}

inline std::string_view to_string(Activation a) {
  return a == Activation::kSilu ? "silu" : "tanh";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "silu") return Activation::kSilu;
  if (s == "tanh") return Activation::kTanh;
  throw UsageError("unknown activation '" + std::string(s) + "'");
}

/// Sinusoidal features [sin(x w_0), cos(x w_0), sin(x w_1), ...] with the
/// frequencies w_k log-spaced over [1, 1e4].
inline Eigen::VectorXd embed_scalar(double x, int dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throw UsageError("embed_scalar: dim must be positive and even, got " + std::to_string(dim));
  }
  const int half = dim / 2;
  Eigen::VectorXd out(dim);
  for (int k = 0; k < half; ++k) {
    const double omega = half == 1 ? 1.0 : std::pow(10.0, 4.0 * k / (half - 1));
    out(2 * k) = std::sin(x * omega);
    out(2 * k + 1) = std::cos(x * omega);
  }
  return out;
}

struct NetworkConfig {
  int horizon = 8;
  int obs_dim = 35;
  int num_tasks = 3;
  std::vector<int> hidden = {128, 128, 128};
  int time_embed_dim = 32;
  int step_embed_dim = 32;
  int cond_embed_dim = 16;
  ConditioningMode mode = ConditioningMode::kActionConcat;
  Activation activation = Activation::kSilu;

  int action_width() const { return horizon * kPoseWidth; }

  int input_width() const {
    const int base = action_width() + obs_dim;
    return mode == ConditioningMode::kFilm ? base : base + cond_embed_dim;
  }

  /// Width of the vector feeding the per-layer scale and shift projections.
  int modulation_width() const {
    const int base = time_embed_dim + step_embed_dim;
    return mode == ConditioningMode::kFilm ? base + cond_embed_dim : base;
  }

  bool operator==(const NetworkConfig&) const = default;
};

/// Number of scalars in a PolicyNetwork built from `c`.
inline long long parameter_count(const NetworkConfig& c) {
  long long n = 0;
  long long in = c.input_width();
  for (int w : c.hidden) {
    n += (in + 1) * w + 2LL * (c.modulation_width() + 1) * w;
    in = w;
  }
  n += (in + 1) * c.action_width();
  n += static_cast<long long>(c.action_width()) * c.input_width();
  n += static_cast<long long>(c.num_tasks + 1) * c.cond_embed_dim;
  return n;
}

/// A batch of network queries, one sample per column.
struct Query {
  Eigen::MatrixXd actions;  // action_width x B
  Eigen::MatrixXd obs;      // obs_dim x B
  std::vector<TaskCondition> conds;
  std::vector<double> t;
  std::vector<double> d;

  Eigen::Index size() const { return actions.cols(); }

  void resize(Eigen::Index action_width, Eigen::Index obs_dim, Eigen::Index batch) {
    actions.resize(action_width, batch);
    obs.resize(obs_dim, batch);
    conds.resize(static_cast<std::size_t>(batch));
    t.resize(static_cast<std::size_t>(batch));
    d.resize(static_cast<std::size_t>(batch));
  }
};

/// Forward intermediates needed by PolicyNetwork::backward. Single use.
class Tape {
 public:
  bool recorded() const { return recorded_; }
  bool consumed() const { return consumed_; }

 private:
  friend class PolicyNetwork;
  std::vector<Eigen::MatrixXd> layer_inputs_;  // input of every linear layer
  std::vector<Eigen::MatrixXd> pre_;           // hidden pre-activations
  std::vector<Eigen::MatrixXd> act_;           // hidden activations before FiLM
  std::vector<Eigen::MatrixXd> gamma_;         // FiLM scales
  Eigen::MatrixXd cond_;                       // condition embeddings, cond_dim x B
  Eigen::MatrixXd mod_;                        // modulation inputs, mod_width x B
  std::vector<int> cond_rows_;
  bool recorded_ = false;
  bool consumed_ = false;
};

class PolicyNetwork {
 public:
  PolicyNetwork() = default;

  PolicyNetwork(NetworkConfig config, std::uint64_t seed) : config_(std::move(config)) {
    validate_config();
    layout();
    initialize(seed);
  }

  const NetworkConfig& config() const { return config_; }
  ConditioningMode mode() const { return config_.mode; }
  int action_width() const { return config_.action_width(); }
  int obs_dim() const { return config_.obs_dim; }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  int num_linear() const { return static_cast<int>(config_.hidden.size()) + 1; }

  Eigen::Map<Eigen::MatrixXd> weight(int l) { return view(linear_w_[idx(l)]); }
  Eigen::Map<const Eigen::MatrixXd> weight(int l) const { return view(linear_w_[idx(l)]); }
  Eigen::Map<Eigen::MatrixXd> bias(int l) { return view(linear_b_[idx(l)]); }
  Eigen::Map<const Eigen::MatrixXd> bias(int l) const { return view(linear_b_[idx(l)]); }

  /// (num_tasks + 1) x cond_embed_dim; the last row is the null token.
  Eigen::Map<Eigen::MatrixXd> cond_table() { return view(cond_table_); }
  Eigen::Map<const Eigen::MatrixXd> cond_table() const { return view(cond_table_); }

  /// Per hidden layer: gamma = Wg m + bg, beta = Wb m + bb, with m the
  /// modulation vector [time emb; step emb] (+ task emb in FiLM mode).
  Eigen::Map<Eigen::MatrixXd> film_gamma_weight(int l) { return view(film_[idx(l)][0]); }
  Eigen::Map<Eigen::MatrixXd> film_gamma_bias(int l) { return view(film_[idx(l)][1]); }
  Eigen::Map<Eigen::MatrixXd> film_beta_weight(int l) { return view(film_[idx(l)][2]); }
  Eigen::Map<Eigen::MatrixXd> film_beta_bias(int l) { return view(film_[idx(l)][3]); }
  Eigen::Map<const Eigen::MatrixXd> film_gamma_weight(int l) const { return view(film_[idx(l)][0]); }
  Eigen::Map<const Eigen::MatrixXd> film_gamma_bias(int l) const { return view(film_[idx(l)][1]); }
  Eigen::Map<const Eigen::MatrixXd> film_beta_weight(int l) const { return view(film_[idx(l)][2]); }
  Eigen::Map<const Eigen::MatrixXd> film_beta_bias(int l) const { return view(film_[idx(l)][3]); }

  /// action_width x input_width linear map from trunk input to output.
  Eigen::Map<Eigen::MatrixXd> skip_weight() { return view(skip_); }
  Eigen::Map<const Eigen::MatrixXd> skip_weight() const { return view(skip_); }

  int cond_row(const TaskCondition& c) const {
    if (c.is_null) return config_.num_tasks;
    if (c.task_id < 0 || c.task_id >= config_.num_tasks) {
      throw UsageError("condition: task id " + std::to_string(c.task_id) + " outside [0, " +
                       std::to_string(config_.num_tasks) + ")");
    }
    return c.task_id;
  }

  /// Batched forward pass; returns action_width x B velocities. When `tape`
  /// is given, records what backward() needs.
  Eigen::MatrixXd forward(const Query& q, Tape* tape = nullptr) const {
    const Eigen::Index batch = q.size();
    check_query(q);

    std::vector<int> rows(static_cast<std::size_t>(batch));
    Eigen::MatrixXd cond(config_.cond_embed_dim, batch);
    const auto table = cond_table();
    for (Eigen::Index b = 0; b < batch; ++b) {
      rows[static_cast<std::size_t>(b)] = cond_row(q.conds[static_cast<std::size_t>(b)]);
      cond.col(b) = table.row(rows[static_cast<std::size_t>(b)]).transpose();
    }

    Eigen::MatrixXd h = assemble_input(q, cond);
    const Eigen::MatrixXd mod = assemble_modulation(q, cond);
    Eigen::MatrixXd out = skip_weight() * h;
    if (tape) {
      *tape = Tape{};
      tape->cond_ = cond;
      tape->mod_ = mod;
      tape->cond_rows_ = rows;
    }

    const int hidden = num_linear() - 1;
    for (int l = 0; l < hidden; ++l) {
      Eigen::MatrixXd z = weight(l) * h;
      z.colwise() += bias(l).col(0);
      Eigen::MatrixXd a = activate(z);
      Eigen::MatrixXd gamma = film_gamma_weight(l) * mod;
      gamma.colwise() += film_gamma_bias(l).col(0);
      Eigen::MatrixXd beta = film_beta_weight(l) * mod;
      beta.colwise() += film_beta_bias(l).col(0);
      if (tape) {
        tape->layer_inputs_.push_back(std::move(h));
        tape->pre_.push_back(std::move(z));
      }
      h = gamma.cwiseProduct(a) + beta;
      if (tape) {
        tape->act_.push_back(std::move(a));
        tape->gamma_.push_back(std::move(gamma));
      }
    }
    out.noalias() += weight(hidden) * h;
    out.colwise() += bias(hidden).col(0);
    if (tape) {
      tape->layer_inputs_.push_back(std::move(h));
      tape->recorded_ = true;
    }
    return out;
  }

  /// Reverse pass given d(loss)/d(output). Returns the flat gradient.
  Eigen::VectorXd backward(Tape& tape, const Eigen::MatrixXd& output_grad) const {
    if (!tape.recorded_) throw UsageError("backward: tape holds no forward pass");
    if (tape.consumed_) throw UsageError("backward: tape already consumed");
    tape.consumed_ = true;
    const Eigen::Index batch = tape.cond_.cols();
    if (output_grad.rows() != action_width() || output_grad.cols() != batch) {
      throw UsageError("backward: output gradient has shape " + std::to_string(output_grad.rows()) +
                       "x" + std::to_string(output_grad.cols()));
    }

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
    const int hidden = num_linear() - 1;
    Eigen::MatrixXd dmod = Eigen::MatrixXd::Zero(config_.modulation_width(), batch);

    Eigen::MatrixXd dh = output_grad;
    for (int l = hidden; l >= 0; --l) {
      Eigen::MatrixXd dz;
      if (l == hidden) {
        dz = std::move(dh);
      } else {
        const auto ul = static_cast<std::size_t>(l);
        const Eigen::MatrixXd dgamma = dh.cwiseProduct(tape.act_[ul]);
        grad_view(grad, film_[ul][0]).noalias() = dgamma * tape.mod_.transpose();
        grad_view(grad, film_[ul][1]) = dgamma.rowwise().sum();
        grad_view(grad, film_[ul][2]).noalias() = dh * tape.mod_.transpose();
        grad_view(grad, film_[ul][3]) = dh.rowwise().sum();
        dmod.noalias() += film_gamma_weight(l).transpose() * dgamma;
        dmod.noalias() += film_beta_weight(l).transpose() * dh;
        dz = dh.cwiseProduct(tape.gamma_[ul]).cwiseProduct(activation_derivative(tape.pre_[ul]));
      }
      const Eigen::MatrixXd& in = tape.layer_inputs_[static_cast<std::size_t>(l)];
      grad_view(grad, linear_w_[idx(l)]).noalias() = dz * in.transpose();
      grad_view(grad, linear_b_[idx(l)]) = dz.rowwise().sum();
      dh.noalias() = weight(l).transpose() * dz;
    }

    // dh now holds d(loss)/d(input) through the trunk; add the skip path.
    grad_view(grad, skip_).noalias() = output_grad * tape.layer_inputs_[0].transpose();
    dh.noalias() += skip_weight().transpose() * output_grad;

    Eigen::MatrixXd dcond;
    if (config_.mode == ConditioningMode::kFilm) {
      dcond = dmod.bottomRows(config_.cond_embed_dim);
    } else {
      dcond = dh.middleRows(cond_offset(), config_.cond_embed_dim);
    }
    auto dtable = grad_view(grad, cond_table_);
    for (Eigen::Index b = 0; b < batch; ++b) {
      dtable.row(tape.cond_rows_[static_cast<std::size_t>(b)]) += dcond.col(b).transpose();
    }
    return grad;
  }

  /// Single-sample convenience wrapper around forward().
  Eigen::VectorXd predict(const Eigen::VectorXd& actions, const Eigen::VectorXd& obs,
                          const TaskCondition& cond, double t, double d) const {
    Query q;
    q.actions = actions;
    q.obs = obs;
    q.conds = {cond};
    q.t = {t};
    q.d = {d};
    return forward(q).col(0);
  }

  bool parameters_finite() const { return params_.allFinite(); }

 private:
  NetworkConfig config_;
  Eigen::VectorXd params_;
  std::vector<ParamBlock> blocks_;
  std::vector<std::size_t> linear_w_, linear_b_;
  std::size_t cond_table_ = 0;
  std::size_t skip_ = 0;
  std::vector<std::array<std::size_t, 4>> film_;

  static std::size_t idx(int l) { return static_cast<std::size_t>(l); }

  Eigen::Map<Eigen::MatrixXd> view(std::size_t block) {
    const ParamBlock& b = blocks_[block];
    return {params_.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<const Eigen::MatrixXd> view(std::size_t block) const {
    const ParamBlock& b = blocks_[block];
    return {params_.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<Eigen::MatrixXd> grad_view(Eigen::VectorXd& grad, std::size_t block) const {
    const ParamBlock& b = blocks_[block];
    return {grad.data() + b.offset, b.rows, b.cols};
  }

  void validate_config() const {
    const auto& c = config_;
    if (c.horizon < 1 || c.obs_dim < 0 || c.num_tasks < 1 || c.hidden.empty()) {
      throw UsageError("network: horizon, num_tasks and hidden widths must be positive");
    }
    for (int w : c.hidden) {
      if (w < 1) throw UsageError("network: hidden widths must be positive");
    }
    if (c.time_embed_dim % 2 || c.step_embed_dim % 2 || c.time_embed_dim < 2 ||
        c.step_embed_dim < 2 || c.cond_embed_dim < 1) {
      throw UsageError("network: embedding dims must be positive (time/step even)");
    }
  }

  std::size_t add_block(std::string name, Eigen::Index rows, Eigen::Index cols) {
    const Eigen::Index offset = blocks_.empty() ? 0 : blocks_.back().offset + blocks_.back().size();
    blocks_.push_back({std::move(name), offset, rows, cols});
    return blocks_.size() - 1;
  }

  void layout() {
    std::vector<int> widths;
    widths.push_back(config_.input_width());
    widths.insert(widths.end(), config_.hidden.begin(), config_.hidden.end());
    widths.push_back(config_.action_width());
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const std::string p = "layer" + std::to_string(l);
      linear_w_.push_back(add_block(p + ".weight", widths[l + 1], widths[l]));
      linear_b_.push_back(add_block(p + ".bias", widths[l + 1], 1));
    }
    skip_ = add_block("skip.weight", config_.action_width(), config_.input_width());
    cond_table_ = add_block("cond_table", config_.num_tasks + 1, config_.cond_embed_dim);
    const int mw = config_.modulation_width();
    for (std::size_t l = 0; l < config_.hidden.size(); ++l) {
      const std::string p = "film" + std::to_string(l);
      const int w = config_.hidden[l];
      film_.push_back({add_block(p + ".gamma_weight", w, mw), add_block(p + ".gamma_bias", w, 1),
                       add_block(p + ".beta_weight", w, mw), add_block(p + ".beta_bias", w, 1)});
    }
    params_ = Eigen::VectorXd::Zero(blocks_.back().offset + blocks_.back().size());
  }

  void initialize(std::uint64_t seed) {
    Rng rng = make_stream(seed, Stream::kInit);
    const int last = num_linear() - 1;
    for (int l = 0; l < last; ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(weight(l).cols()));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index i = 0; i < weight(l).size(); ++i) weight(l).data()[i] = u(rng);
      for (Eigen::Index i = 0; i < bias(l).size(); ++i) bias(l).data()[i] = u(rng);
    }
    // The output layer and skip stay zero so the initial velocity field is
    // zero; the modulation starts as the identity (gamma = 1, beta = 0).
    std::normal_distribution<double> normal(0.0, 1.0);
    auto table = cond_table();
    for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = normal(rng);
    for (std::size_t l = 0; l < film_.size(); ++l) {
      view(film_[l][1]).setOnes();
    }
  }

  Eigen::Index cond_offset() const {
    return config_.mode == ConditioningMode::kActionConcat ? config_.action_width()
                                                            : config_.action_width() + config_.obs_dim;
  }

  void check_query(const Query& q) const {
    const Eigen::Index batch = q.size();
    const auto n = static_cast<std::size_t>(batch);
    if (q.actions.rows() != action_width()) {
      throw UsageError("forward: actions has " + std::to_string(q.actions.rows()) +
                       " rows, expected " + std::to_string(action_width()));
    }
    if (q.obs.rows() != config_.obs_dim || q.obs.cols() != batch) {
      throw UsageError("forward: observation has " + std::to_string(q.obs.rows()) +
                       " rows, expected " + std::to_string(config_.obs_dim));
    }
    if (q.conds.size() != n) throw UsageError("forward: condition count does not match batch");
    if (q.t.size() != n) throw UsageError("forward: timestep count does not match batch");
    if (q.d.size() != n) throw UsageError("forward: step-size count does not match batch");
  }

  Eigen::MatrixXd assemble_input(const Query& q, const Eigen::MatrixXd& cond) const {
    const Eigen::Index batch = q.size();
    const int aw = action_width();
    const int od = config_.obs_dim;
    const int cd = config_.cond_embed_dim;
    Eigen::MatrixXd x(config_.input_width(), batch);
    Eigen::Index row = 0;
    x.middleRows(row, aw) = q.actions;
    row += aw;
    switch (config_.mode) {
      case ConditioningMode::kActionConcat:
        x.middleRows(row, cd) = cond;
        row += cd;
        x.middleRows(row, od) = q.obs;
        row += od;
        break;
      case ConditioningMode::kObsConcat:
        x.middleRows(row, od) = q.obs;
        row += od;
        x.middleRows(row, cd) = cond;
        row += cd;
        break;
      case ConditioningMode::kFilm:
        x.middleRows(row, od) = q.obs;
        row += od;
        break;
    }
    return x;
  }

  Eigen::MatrixXd assemble_modulation(const Query& q, const Eigen::MatrixXd& cond) const {
    const int te = config_.time_embed_dim;
    const int de = config_.step_embed_dim;
    Eigen::MatrixXd m(config_.modulation_width(), q.size());
    for (Eigen::Index b = 0; b < q.size(); ++b) {
      const auto ub = static_cast<std::size_t>(b);
      m.col(b).head(te) = embed_scalar(q.t[ub], te);
      m.col(b).segment(te, de) = embed_scalar(q.d[ub], de);
    }
    if (config_.mode == ConditioningMode::kFilm) m.bottomRows(config_.cond_embed_dim) = cond;
    return m;
  }

  Eigen::MatrixXd activate(const Eigen::MatrixXd& z) const {
    if (config_.activation == Activation::kTanh) return z.array().tanh().matrix();
    const Eigen::ArrayXXd sig = (1.0 + (-z.array()).exp()).inverse();
    return (z.array() * sig).matrix();
  }

  Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& z) const {
    if (config_.activation == Activation::kTanh) {
      return (1.0 - z.array().tanh().square()).matrix();
    }
    const Eigen::ArrayXXd sig = (1.0 + (-z.array()).exp()).inverse();
    return (sig * (1.0 + z.array() * (1.0 - sig))).matrix();
  }
};

}  // namespace sdp
