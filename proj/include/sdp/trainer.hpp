#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <string>

#include "sdp/adamw.hpp"
#include "sdp/ddpm.hpp"
#include "sdp/engine.hpp"
#include "sdp/errors.hpp"
#include "sdp/network.hpp"
#include "sdp/rng.hpp"
#include "sdp/shortcut.hpp"

namespace sdp {

struct TrainOptions {
  int epochs = 500;
  /// Training windows drawn per demonstration per epoch; an epoch is
  /// ceil(demos * windows_per_demo / batch_size) optimizer steps.
  int windows_per_demo = 256;
  BatchOptions batch;
  AdamWOptions adamw;
  StepSizeGrid grid;
  NoiseSchedule schedule = default_baseline_schedule();
};

inline int batches_per_epoch(std::size_t demos, const TrainOptions& o) {
  const auto windows = static_cast<long long>(demos) * o.windows_per_demo;
  return static_cast<int>(std::max<long long>(1, (windows + o.batch.batch_size - 1) / o.batch.batch_size));
}

/// Everything that evolves during training.
struct TrainState {
  PolicyNetwork net;
  AdamW optimizer;
  TrainingStreams streams;
  std::uint64_t epochs_completed = 0;

  TrainState(PolicyNetwork n, const AdamWOptions& o, std::uint64_t seed)
      : net(std::move(n)), optimizer(net.parameters().size(), o), streams(seed) {}
};

inline std::string save_streams(const TrainingStreams& s) {
  std::ostringstream os;
  os << s.noise << '\n' << s.time << '\n' << s.step << '\n' << s.dropout << '\n' << s.data;
  return os.str();
}

inline void load_streams(TrainingStreams& s, const std::string& text) {
  std::istringstream is(text);
  is >> s.noise >> s.time >> s.step >> s.dropout >> s.data;
  if (!is) throw DataError("checkpoint: corrupt random stream state");
}

/// One optimizer step; returns the batch loss.
inline double train_step(TrainState& st, std::span<const Demonstration> data, Engine engine,
                         const TrainOptions& o) {
  RegressionProblem p = engine == Engine::kShortcut
                            ? make_regression_problem(st.net, build_batch(data, st.streams, o.batch, o.grid), o.grid)
                            : build_ddpm_problem(data, st.streams, o.batch, o.schedule);
  const LossResult r = regression_loss(st.net, p);
  st.optimizer.step(st.net.parameters(), r.grad, &st.net.blocks());
  return r.loss;
}

using EpochCallback = std::function<void(std::uint64_t epoch, double mean_loss)>;

/// Runs epochs until o.epochs have completed (continuing from a resumed state).
/// Single-threaded and deterministic given the state's seed.
inline void train(TrainState& st, std::span<const Demonstration> data, Engine engine, const TrainOptions& o,
                  const EpochCallback& on_epoch = {}) {
  if (data.empty()) throw DataError("train: dataset is empty");
  const int steps = batches_per_epoch(data.size(), o);
  while (st.epochs_completed < static_cast<std::uint64_t>(o.epochs)) {
    const std::uint64_t epoch = st.epochs_completed + 1;
    double total = 0.0;
    for (int s = 0; s < steps; ++s) {
      double loss;
      try {
        loss = train_step(st, data, engine, o);
      } catch (const NumericalError& e) {
        throw NumericalError("epoch " + std::to_string(epoch) + ": " + e.what());
      }
      total += loss;
    }
    st.epochs_completed = epoch;
    if (on_epoch) on_epoch(epoch, total / steps);
  }
}

}  // namespace sdp
