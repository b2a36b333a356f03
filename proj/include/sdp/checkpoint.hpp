#pragma once

// Binary checkpoint container (little-endian):
//
//   magic      8 bytes  "SDPCKPT1"
//   version    u32      1
//   engine     u32      0 = shortcut, 1 = ddim
//   hash       u64      training configuration hash
//   epochs     u64      epochs completed
//   network    i32 horizon, obs_dim, num_tasks, n_hidden, hidden[n_hidden],
//              time_embed_dim, step_embed_dim, cond_embed_dim, mode, activation
//   blocks     u32 count, then per block: u32 name length, name, i64 rows, i64 cols
//   params     f64 per block, row-major
//   optimizer  f64 lr, weight_decay, beta1, beta2, eps; u64 step;
//              first moment and second moment, same order as params
//   streams    u64 length + text state of the training random streams

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sdp/adamw.hpp"
#include "sdp/engine.hpp"
#include "sdp/errors.hpp"
#include "sdp/network.hpp"

namespace sdp {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

struct Checkpoint {
  Engine engine = Engine::kShortcut;
  std::uint64_t config_hash = 0;
  std::uint64_t epochs_completed = 0;
  PolicyNetwork net;
  AdamW optimizer;
  std::string stream_state;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'S', 'D', 'P', 'C', 'K', 'P', 'T', '1'};

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}
  template <class T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    os_.write(buf, sizeof(T));
  }
  void bytes(const std::string& s) {
    put<std::uint64_t>(s.size());
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void row_major(const Eigen::VectorXd& flat, const std::vector<ParamBlock>& blocks) {
    for (const ParamBlock& b : blocks) {
      for (Eigen::Index r = 0; r < b.rows; ++r)
        for (Eigen::Index c = 0; c < b.cols; ++c) put<double>(flat(b.offset + c * b.rows + r));
    }
  }

 private:
  std::ostream& os_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}
  template <class T>
  T get() {
    char buf[sizeof(T)];
    if (!is_.read(buf, sizeof(T))) throw DataError("checkpoint " + path_ + ": truncated");
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }
  std::string bytes(std::uint64_t limit = 1u << 24) {
    const auto n = get<std::uint64_t>();
    if (n > limit) throw DataError("checkpoint " + path_ + ": corrupt string length");
    std::string s(n, '\0');
    if (n && !is_.read(s.data(), static_cast<std::streamsize>(n))) {
      throw DataError("checkpoint " + path_ + ": truncated");
    }
    return s;
  }
  Eigen::VectorXd row_major(Eigen::Index total, const std::vector<ParamBlock>& blocks) {
    Eigen::VectorXd flat(total);
    for (const ParamBlock& b : blocks) {
      for (Eigen::Index r = 0; r < b.rows; ++r)
        for (Eigen::Index c = 0; c < b.cols; ++c) flat(b.offset + c * b.rows + r) = get<double>();
    }
    return flat;
  }
  const std::string& path() const { return path_; }

 private:
  std::istream& is_;
  std::string path_;
};

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  detail::BinaryWriter w(os);
  os.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
  w.put<std::uint32_t>(1);
  w.put<std::uint32_t>(ckpt.engine == Engine::kShortcut ? 0 : 1);
  w.put<std::uint64_t>(ckpt.config_hash);
  w.put<std::uint64_t>(ckpt.epochs_completed);

  const NetworkConfig& c = ckpt.net.config();
  w.put<std::int32_t>(c.horizon);
  w.put<std::int32_t>(c.obs_dim);
  w.put<std::int32_t>(c.num_tasks);
  w.put<std::int32_t>(static_cast<std::int32_t>(c.hidden.size()));
  for (int h : c.hidden) w.put<std::int32_t>(h);
  w.put<std::int32_t>(c.time_embed_dim);
  w.put<std::int32_t>(c.step_embed_dim);
  w.put<std::int32_t>(c.cond_embed_dim);
  w.put<std::int32_t>(static_cast<std::int32_t>(c.mode));
  w.put<std::int32_t>(static_cast<std::int32_t>(c.activation));

  const auto& blocks = ckpt.net.blocks();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(blocks.size()));
  for (const ParamBlock& b : blocks) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(b.name.size()));
    os.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    w.put<std::int64_t>(b.rows);
    w.put<std::int64_t>(b.cols);
  }
  w.row_major(ckpt.net.parameters(), blocks);

  const AdamWOptions& o = ckpt.optimizer.options();
  w.put<double>(o.lr);
  w.put<double>(o.weight_decay);
  w.put<double>(o.beta1);
  w.put<double>(o.beta2);
  w.put<double>(o.eps);
  w.put<std::uint64_t>(ckpt.optimizer.step_count());
  w.row_major(ckpt.optimizer.first_moment(), blocks);
  w.row_major(ckpt.optimizer.second_moment(), blocks);
  w.bytes(ckpt.stream_state);
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  detail::BinaryReader r(is, path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0) {
    throw DataError("checkpoint " + path + ": bad magic");
  }
  if (r.get<std::uint32_t>() != 1) throw DataError("checkpoint " + path + ": unsupported version");

  Checkpoint ckpt;
  const auto engine = r.get<std::uint32_t>();
  if (engine > 1) throw DataError("checkpoint " + path + ": unknown engine");
  ckpt.engine = engine == 0 ? Engine::kShortcut : Engine::kDdim;
  ckpt.config_hash = r.get<std::uint64_t>();
  ckpt.epochs_completed = r.get<std::uint64_t>();

  NetworkConfig c;
  c.horizon = r.get<std::int32_t>();
  c.obs_dim = r.get<std::int32_t>();
  c.num_tasks = r.get<std::int32_t>();
  const auto n_hidden = r.get<std::int32_t>();
  if (n_hidden < 1 || n_hidden > 64) throw DataError("checkpoint " + path + ": corrupt layer count");
  c.hidden.resize(static_cast<std::size_t>(n_hidden));
  for (int& h : c.hidden) h = r.get<std::int32_t>();
  c.time_embed_dim = r.get<std::int32_t>();
  c.step_embed_dim = r.get<std::int32_t>();
  c.cond_embed_dim = r.get<std::int32_t>();
  const auto mode = r.get<std::int32_t>();
  const auto act = r.get<std::int32_t>();
  const auto dim_ok = [](int v) { return v >= 0 && v <= (1 << 14); };
  bool dims_ok = dim_ok(c.horizon) && dim_ok(c.obs_dim) && dim_ok(c.num_tasks) && dim_ok(c.time_embed_dim) &&
                 dim_ok(c.step_embed_dim) && dim_ok(c.cond_embed_dim);
  for (int h : c.hidden) dims_ok = dims_ok && dim_ok(h);
  if (!dims_ok || mode < 0 || mode > 2 || act < 0 || act > 1) {
    throw DataError("checkpoint " + path + ": corrupt network header");
  }
  c.mode = static_cast<ConditioningMode>(mode);
  c.activation = static_cast<Activation>(act);
  // Parameters, first and second moments: three doubles per scalar.
  const auto here = is.tellg();
  is.seekg(0, std::ios::end);
  const auto remaining = static_cast<long long>(is.tellg() - here);
  is.seekg(here);
  if (parameter_count(c) * 3 * 8 > remaining) throw DataError("checkpoint " + path + ": truncated");
  try {
    ckpt.net = PolicyNetwork(c, 0);
  } catch (const UsageError& e) {
    throw DataError("checkpoint " + path + ": " + e.what());
  }

  const auto& blocks = ckpt.net.blocks();
  if (r.get<std::uint32_t>() != blocks.size()) {
    throw DataError("checkpoint " + path + ": block count mismatch");
  }
  for (const ParamBlock& b : blocks) {
    const auto len = r.get<std::uint32_t>();
    std::string name(len, '\0');
    if (len > 256 || !is.read(name.data(), len)) throw DataError("checkpoint " + path + ": truncated");
    const auto rows = r.get<std::int64_t>();
    const auto cols = r.get<std::int64_t>();
    if (name != b.name || rows != b.rows || cols != b.cols) {
      throw DataError("checkpoint " + path + ": block '" + name + "' does not match network layout");
    }
  }
  const Eigen::Index total = ckpt.net.parameters().size();
  ckpt.net.parameters() = r.row_major(total, blocks);

  AdamWOptions o;
  o.lr = r.get<double>();
  o.weight_decay = r.get<double>();
  o.beta1 = r.get<double>();
  o.beta2 = r.get<double>();
  o.eps = r.get<double>();
  ckpt.optimizer = AdamW(total, o);
  const auto step = r.get<std::uint64_t>();
  Eigen::VectorXd m = r.row_major(total, blocks);
  Eigen::VectorXd v = r.row_major(total, blocks);
  ckpt.optimizer.restore(step, std::move(m), std::move(v));
  ckpt.stream_state = r.bytes();
  if (is.peek() != std::char_traits<char>::eof()) throw DataError("checkpoint " + path + ": trailing bytes");
  return ckpt;
}

}  // namespace sdp
