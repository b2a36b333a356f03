#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "sdp/checkpoint.hpp"

namespace {

namespace fs = std::filesystem;

std::string read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void write_bytes(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sdp_ckpt_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  sdp::Checkpoint make(sdp::ConditioningMode mode) {
    sdp::NetworkConfig c;
    c.horizon = 3;
    c.obs_dim = 4;
    c.hidden = {8, 6};
    c.mode = mode;
    c.activation = sdp::Activation::kTanh;
    sdp::Checkpoint k;
    k.engine = sdp::Engine::kDdim;
    k.config_hash = 0x0123456789abcdefULL;
    k.epochs_completed = 17;
    k.net = sdp::PolicyNetwork(c, 5);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 1);
    for (Eigen::Index i = 0; i < k.net.parameters().size(); ++i) k.net.parameters()(i) = n(rng);
    sdp::AdamWOptions o;
    o.lr = 3e-4;
    k.optimizer = sdp::AdamW(k.net.parameters().size(), o);
    for (int s = 0; s < 3; ++s) {
      Eigen::VectorXd g = Eigen::VectorXd::NullaryExpr(k.net.parameters().size(), [&] { return n(rng); });
      k.optimizer.step(k.net.parameters(), g);
    }
    k.stream_state = "1 2 3\nstate with spaces";
    return k;
  }

  fs::path dir_;
};

TEST_F(CheckpointTest, RoundTripRestoresEverything) {
  for (auto mode : {sdp::ConditioningMode::kActionConcat, sdp::ConditioningMode::kObsConcat,
                    sdp::ConditioningMode::kFilm}) {
    const sdp::Checkpoint k = make(mode);
    const auto path = (dir_ / "a.bin").string();
    sdp::save_checkpoint(path, k);
    const sdp::Checkpoint r = sdp::load_checkpoint(path);
    EXPECT_EQ(r.engine, k.engine);
    EXPECT_EQ(r.config_hash, k.config_hash);
    EXPECT_EQ(r.epochs_completed, k.epochs_completed);
    EXPECT_EQ(r.net.config(), k.net.config());
    EXPECT_EQ(r.net.parameters(), k.net.parameters());
    EXPECT_EQ(r.optimizer.step_count(), 3u);
    EXPECT_EQ(r.optimizer.options().lr, 3e-4);
    EXPECT_EQ(r.optimizer.first_moment(), k.optimizer.first_moment());
    EXPECT_EQ(r.optimizer.second_moment(), k.optimizer.second_moment());
    EXPECT_EQ(r.stream_state, k.stream_state);
  }
}

TEST_F(CheckpointTest, BytesAreStableAcrossSaveLoadSave) {
  const sdp::Checkpoint k = make(sdp::ConditioningMode::kFilm);
  const auto a = dir_ / "a.bin";
  const auto b = dir_ / "b.bin";
  const auto c = dir_ / "c.bin";
  sdp::save_checkpoint(a.string(), k);
  sdp::save_checkpoint(b.string(), k);
  sdp::save_checkpoint(c.string(), sdp::load_checkpoint(a.string()));
  EXPECT_EQ(read_bytes(a), read_bytes(b));
  EXPECT_EQ(read_bytes(a), read_bytes(c));
  EXPECT_EQ(read_bytes(a).substr(0, 8), "SDPCKPT1");
}

TEST_F(CheckpointTest, ParameterCountMatchesLayout) {
  const sdp::Checkpoint k = make(sdp::ConditioningMode::kObsConcat);
  EXPECT_EQ(sdp::parameter_count(k.net.config()), k.net.parameters().size());
  EXPECT_EQ(sdp::parameter_count(sdp::NetworkConfig{}), sdp::PolicyNetwork(sdp::NetworkConfig{}, 0).parameters().size());
}

TEST_F(CheckpointTest, EveryTruncationIsADataError) {
  const auto path = dir_ / "a.bin";
  sdp::save_checkpoint(path.string(), make(sdp::ConditioningMode::kActionConcat));
  const std::string bytes = read_bytes(path);
  const auto cut = dir_ / "cut.bin";
  for (std::size_t n = 0; n < bytes.size(); n += 1 + n / 8) {
    write_bytes(cut, bytes.substr(0, n));
    EXPECT_THROW(sdp::load_checkpoint(cut.string()), sdp::DataError) << "length " << n;
  }
  write_bytes(cut, bytes + "x");
  EXPECT_THROW(sdp::load_checkpoint(cut.string()), sdp::DataError);
}

TEST_F(CheckpointTest, CorruptHeadersAreDataErrors) {
  const auto path = dir_ / "a.bin";
  sdp::save_checkpoint(path.string(), make(sdp::ConditioningMode::kActionConcat));
  const std::string bytes = read_bytes(path);
  const auto bad = dir_ / "bad.bin";

  std::string s = bytes;
  s[0] = 'X';
  write_bytes(bad, s);
  EXPECT_THROW(sdp::load_checkpoint(bad.string()), sdp::DataError);

  s = bytes;
  s[8] = 2;  // version
  write_bytes(bad, s);
  EXPECT_THROW(sdp::load_checkpoint(bad.string()), sdp::DataError);

  s = bytes;
  s[12] = 7;  // engine
  write_bytes(bad, s);
  EXPECT_THROW(sdp::load_checkpoint(bad.string()), sdp::DataError);

  // First hidden width, made huge: must fail cleanly instead of allocating.
  s = bytes;
  const std::size_t hidden0 = 8 + 4 + 4 + 8 + 8 + 4 * 4;
  s[hidden0 + 2] = 0x7f;
  write_bytes(bad, s);
  EXPECT_THROW(sdp::load_checkpoint(bad.string()), sdp::DataError);

  EXPECT_THROW(sdp::load_checkpoint((dir_ / "missing.bin").string()), sdp::DataError);
}

}  // namespace
