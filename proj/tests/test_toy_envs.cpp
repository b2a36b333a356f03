#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "sdp/toy_envs.hpp"

namespace {

namespace fs = std::filesystem;
namespace so3 = sdp::so3;
using sdp::Vec3;

TEST(Scene, ObjectsAreSeparatedAndInsideTheWorkspace) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const sdp::Scene s = sdp::make_scene_from_seed(seed);
    ASSERT_EQ(s.object_count(), sdp::kNumObjects);
    for (int i = 0; i < s.object_count(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      EXPECT_TRUE((s.positions[ui].array() >= 0.0).all() && (s.positions[ui].array() <= 1.0).all());
      EXPECT_LT((s.orientations[ui].transpose() * s.orientations[ui] - sdp::Mat3::Identity()).norm(), 1e-12);
      EXPECT_NEAR(s.orientations[ui].determinant(), 1.0, 1e-12);
      for (int j = 0; j < i; ++j) {
        EXPECT_GE((s.positions[ui] - s.positions[static_cast<std::size_t>(j)]).norm(), sdp::kMinSeparation);
      }
    }
  }
}

TEST(Scene, DeterministicFromSeed) {
  const sdp::Scene a = sdp::make_scene_from_seed(42);
  const sdp::Scene b = sdp::make_scene_from_seed(42);
  const sdp::Scene c = sdp::make_scene_from_seed(43);
  EXPECT_EQ(sdp::observation(a), sdp::observation(b));
  EXPECT_NE(sdp::observation(a), sdp::observation(c));
}

TEST(Scene, ObservationLayout) {
  const sdp::Scene s = sdp::make_scene_from_seed(7);
  const Eigen::VectorXd o = sdp::observation(s);
  ASSERT_EQ(o.size(), sdp::kObsDim);
  for (int i = 0; i < s.object_count(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    EXPECT_EQ(Vec3(o.segment<3>(7 * i)), s.positions[ui]);
    EXPECT_LT((so3::exp_map(o.segment<3>(7 * i + 3)) - s.orientations[ui]).norm(), 1e-12);
    EXPECT_EQ(o(7 * i + 6), i < sdp::kNumTaskObjects ? 0.0 : 1.0);
  }
}

TEST(Scene, CrowdedWorkspaceIsADataError) {
  EXPECT_THROW(sdp::make_scene_from_seed(1, 2, 2.0), sdp::DataError);
  EXPECT_NO_THROW(sdp::make_scene_from_seed(1, 0));
  EXPECT_EQ(sdp::make_scene_from_seed(1, 0).object_count(), sdp::kNumTaskObjects);
}

TEST(Tasks, UnknownIdIsAUsageError) {
  EXPECT_THROW(sdp::task_spec(-1), sdp::UsageError);
  EXPECT_THROW(sdp::task_spec(3), sdp::UsageError);
  EXPECT_EQ(sdp::task_spec(1).expert, "reach-lift");
}

TEST(Tasks, ExpertsSucceedOnEveryScene) {
  for (int task = 0; task < sdp::kNumTasks; ++task) {
    const sdp::TaskSpec spec = sdp::task_spec(task);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const sdp::Scene s = sdp::make_scene_from_seed(seed);
      const sdp::ActionChunk c = sdp::expert_chunk(spec, s);
      ASSERT_EQ(c.horizon(), sdp::kHorizon);
      ASSERT_TRUE(sdp::success(spec, c.final_pose(), s)) << "task " << task << " seed " << seed;
      for (const auto& p : c.poses) EXPECT_LE(p.r.norm(), so3::kPi);
    }
  }
}

TEST(Tasks, ReachLiftExpertShape) {
  const sdp::Scene s = sdp::make_scene_from_seed(3);
  const sdp::ActionChunk c = sdp::expert_chunk(sdp::task_spec(1), s);
  const Vec3 obj = s.positions[1];
  EXPECT_LT((c.poses[3].s - obj).norm(), 1e-15);
  EXPECT_LT((c.poses[7].s - (obj + Vec3(0, 0, sdp::kLiftHeight))).norm(), 1e-15);
  EXPECT_EQ(c.poses[0].g, 0.0);
  EXPECT_EQ(c.poses[7].g, 1.0);
}

TEST(Tasks, SuccessThresholdsAreClosed) {
  const sdp::Scene s = sdp::make_scene_from_seed(11);
  for (int task = 0; task < sdp::kNumTasks; ++task) {
    const sdp::TaskSpec spec = sdp::task_spec(task);
    const sdp::PoseAction goal = sdp::goal_pose(spec, s);
    EXPECT_TRUE(sdp::success(spec, goal, s));

    sdp::PoseAction p = goal;
    p.s.x() += spec.eps_s - 1e-12;
    EXPECT_TRUE(sdp::success(spec, p, s));
    p.s.x() = goal.s.x() + spec.eps_s + 1e-9;
    EXPECT_FALSE(sdp::success(spec, p, s));

    const sdp::Mat3 g = so3::exp_map(goal.r);
    p = goal;
    p.r = so3::log_map(g * so3::exp_map(Vec3(0, 0, spec.eps_r - 1e-9)));
    EXPECT_TRUE(sdp::success(spec, p, s));
    p.r = so3::log_map(g * so3::exp_map(Vec3(0, 0, spec.eps_r + 1e-9)));
    EXPECT_FALSE(sdp::success(spec, p, s));
  }
}

TEST(Tasks, PlaceGoalCarriesTheObjectOrientation) {
  const sdp::Scene s = sdp::make_scene_from_seed(5);
  const sdp::PoseAction g = sdp::goal_pose(sdp::task_spec(2), s);
  EXPECT_LT((so3::exp_map(g.r) - s.orientations[2]).norm(), 1e-12);
  EXPECT_LT((g.s - (s.positions[0] + Vec3(0, 0, sdp::kStackHeight))).norm(), 1e-15);
}

TEST(Demonstrations, DeterministicAndTaskSpecific) {
  const auto a = sdp::make_demonstrations(0, 20, 9);
  const auto b = sdp::make_demonstrations(0, 20, 9);
  const auto c = sdp::make_demonstrations(1, 20, 9);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].observation, b[i].observation);
    EXPECT_EQ(a[i].chunk, b[i].chunk);
    EXPECT_EQ(c[i].task_id, 1);
  }
  EXPECT_NE(a[0].observation, c[0].observation);
}

class DatasetTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sdp_data_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(DatasetTest, RoundTripIsBitExact) {
  std::vector<sdp::Demonstration> demos;
  for (int t = 0; t < sdp::kNumTasks; ++t) {
    const auto d = sdp::make_demonstrations(t, 100, 21);
    demos.insert(demos.end(), d.begin(), d.end());
  }
  const auto path = (dir_ / "d.txt").string();
  sdp::write_dataset(path, demos);
  const auto back = sdp::read_dataset(path);
  ASSERT_EQ(back.size(), 300u);
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].task_id, demos[i].task_id);
    EXPECT_EQ(back[i].observation, demos[i].observation);
    EXPECT_EQ(back[i].chunk, demos[i].chunk);
  }
  const auto empty = (dir_ / "e.txt").string();
  sdp::write_dataset(empty, {});
  EXPECT_TRUE(sdp::read_dataset(empty).empty());
}

void expect_data_error(const std::string& text, const std::string& where) {
  std::istringstream is(text);
  try {
    sdp::parse_dataset(is, "f.txt");
    FAIL() << "expected DataError for " << where;
  } catch (const sdp::DataError& e) {
    EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
  }
}

TEST_F(DatasetTest, MalformedFilesNameTheLine) {
  const std::string text = sdp::format_dataset(sdp::make_demonstrations(0, 3, 1));
  expect_data_error("", "f.txt:1");
  expect_data_error("NOTDATA v1 H=8 obs_dim=35\n", "f.txt:1");
  expect_data_error("SDPDATA v2 H=8 obs_dim=35\n", "f.txt:1");
  expect_data_error("SDPDATA v1 H=x obs_dim=35\n", "f.txt:1");

  // Truncated final record.
  expect_data_error(text.substr(0, text.size() - 40), "f.txt:4");

  std::string bad = text;
  const auto second = bad.find('\n', bad.find('\n') + 1) + 1;
  bad.insert(second + 2, "abc ");
  expect_data_error(bad, "f.txt:3");

  bad = text;
  bad[second] = '|';
  expect_data_error(bad, "f.txt:3");

  expect_data_error(text + "\n", "f.txt:5");
  EXPECT_THROW(sdp::read_dataset((dir_ / "missing.txt").string()), sdp::DataError);
}

TEST(Evaluation, ExpertIsPerfectAndNoiseFails) {
  for (int task = 0; task < sdp::kNumTasks; ++task) {
    const sdp::TaskSpec spec = sdp::task_spec(task);
    EXPECT_EQ(sdp::evaluate_policy(sdp::ExpertPolicy{}, spec, 1000, 1).rate(), 1.0);
    EXPECT_LT(sdp::evaluate_policy(sdp::NoisePolicy{}, spec, 1000, 1).rate(), 0.05);
  }
}

TEST(Evaluation, MislabeledExpertFails) {
  const sdp::EvalResult r = sdp::evaluate_policy(sdp::ExpertPolicy{}, sdp::task_spec(0), 500, 2, 1);
  EXPECT_LT(r.rate(), 0.05);
}

TEST(Evaluation, IndependentOfThreadCount) {
  const sdp::TaskSpec spec = sdp::task_spec(1);
  struct Coin {
    sdp::ActionChunk operator()(const sdp::Scene& s, const Eigen::VectorXd&, const sdp::TaskCondition& c,
                                sdp::Rng& rng) const {
      return rng() % 2 ? sdp::expert_chunk(sdp::task_spec(c.task_id), s) : sdp::ActionChunk(sdp::kHorizon);
    }
  };
  const sdp::EvalResult a = sdp::evaluate_policy(Coin{}, spec, 301, 4, 1, 1);
  const sdp::EvalResult b = sdp::evaluate_policy(Coin{}, spec, 301, 4, 1, 3);
  EXPECT_EQ(a.successes, b.successes);
  EXPECT_GT(a.successes, 100);
  EXPECT_LT(a.successes, 200);
  EXPECT_THROW(sdp::evaluate_policy(Coin{}, spec, 0, 4), sdp::UsageError);
}

}  // namespace
