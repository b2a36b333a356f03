#pragma once

// Scalar-loop reference forward pass for PolicyNetwork, used by the network
// tests. Reads parameters through the public accessors only.

#include <cmath>
#include <vector>

#include "sdp/network.hpp"

namespace oracle {

inline double act(sdp::Activation a, double z) {
  return a == sdp::Activation::kTanh ? std::tanh(z) : z / (1.0 + std::exp(-z));
}

inline std::vector<double> sinusoid(double x, int dim) {
  std::vector<double> out;
  const int half = dim / 2;
  for (int k = 0; k < half; ++k) {
    const double w = half == 1 ? 1.0 : std::pow(10000.0, static_cast<double>(k) / (half - 1));
    out.push_back(std::sin(x * w));
    out.push_back(std::cos(x * w));
  }
  return out;
}

inline std::vector<double> forward(sdp::PolicyNetwork& net, const Eigen::VectorXd& a, const Eigen::VectorXd& o,
                                   const sdp::TaskCondition& c, double t, double d) {
  const auto& cfg = net.config();
  const int row = c.is_null ? cfg.num_tasks : c.task_id;
  std::vector<double> cond;
  for (int j = 0; j < cfg.cond_embed_dim; ++j) cond.push_back(net.cond_table()(row, j));

  std::vector<double> x;
  for (Eigen::Index i = 0; i < a.size(); ++i) x.push_back(a(i));
  if (cfg.mode == sdp::ConditioningMode::kActionConcat) x.insert(x.end(), cond.begin(), cond.end());
  for (Eigen::Index i = 0; i < o.size(); ++i) x.push_back(o(i));
  if (cfg.mode == sdp::ConditioningMode::kObsConcat) x.insert(x.end(), cond.begin(), cond.end());

  std::vector<double> m = sinusoid(t, cfg.time_embed_dim);
  for (double v : sinusoid(d, cfg.step_embed_dim)) m.push_back(v);
  if (cfg.mode == sdp::ConditioningMode::kFilm) m.insert(m.end(), cond.begin(), cond.end());

  std::vector<double> h = x;
  const int layers = net.num_linear();
  for (int l = 0; l < layers; ++l) {
    auto w = net.weight(l);
    auto b = net.bias(l);
    std::vector<double> next(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double z = b(i, 0);
      for (Eigen::Index j = 0; j < w.cols(); ++j) z += w(i, j) * h[static_cast<std::size_t>(j)];
      if (l + 1 < layers) {
        double g = net.film_gamma_bias(l)(i, 0);
        double be = net.film_beta_bias(l)(i, 0);
        for (std::size_t j = 0; j < m.size(); ++j) {
          g += net.film_gamma_weight(l)(i, static_cast<Eigen::Index>(j)) * m[j];
          be += net.film_beta_weight(l)(i, static_cast<Eigen::Index>(j)) * m[j];
        }
        z = g * act(cfg.activation, z) + be;
      }
      next[static_cast<std::size_t>(i)] = z;
    }
    h = std::move(next);
  }
  auto skip = net.skip_weight();
  for (Eigen::Index i = 0; i < skip.rows(); ++i) {
    for (Eigen::Index j = 0; j < skip.cols(); ++j) h[static_cast<std::size_t>(i)] += skip(i, j) * x[static_cast<std::size_t>(j)];
  }
  return h;
}

}  // namespace oracle
