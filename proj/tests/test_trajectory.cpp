#include "quadmimic/trajectory.hpp"

#include "quadmimic/errors.hpp"
#include "quadmimic/rng.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

namespace quadmimic {
namespace {

std::vector<TrajectoryRecord> random_records(int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<TrajectoryRecord> recs(n);
  for (int i = 0; i < n; ++i) {
    TrajectoryRecord& r = recs[i];
    r.step = i;
    r.time = i * kPolicyDt;
    r.base_position = Vec3(rng.normal(), rng.normal(), rng.normal());
    r.base_orientation = Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    r.base_orientation.normalize();
    r.base_linear_velocity = Vec3(rng.normal(), rng.normal(), rng.normal());
    r.base_angular_velocity = Vec3(rng.normal(), rng.normal(), rng.normal());
    for (int j = 0; j < kNumJoints; ++j) {
      r.joint_angles[j] = rng.normal();
      r.applied_torque[j] = 20.0 * rng.uniform(-1.0, 1.0);
    }
    for (int leg = 0; leg < kNumLegs; ++leg) {
      r.toe_positions[leg] = Vec3(rng.normal(), rng.normal(), rng.normal());
      r.toe_contacts[leg] = rng.uniform() < 0.5;
    }
    r.reward = rng.normal();
    r.termination = i + 1 == n ? "time_limit" : "none";
  }
  return recs;
}

TEST(TrajectoryIo, RoundTripIsExact) {
  const auto recs = random_records(7, 4);
  std::stringstream ss;
  write_trajectory(recs, ss);
  const auto back = parse_trajectory(ss, "t");
  ASSERT_EQ(back.size(), recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].step, recs[i].step);
    EXPECT_EQ(back[i].time, recs[i].time);
    EXPECT_TRUE(back[i].base_position == recs[i].base_position);
    EXPECT_TRUE(back[i].base_orientation.coeffs() == recs[i].base_orientation.coeffs());
    EXPECT_TRUE(back[i].base_linear_velocity == recs[i].base_linear_velocity);
    EXPECT_TRUE(back[i].base_angular_velocity == recs[i].base_angular_velocity);
    EXPECT_TRUE(back[i].joint_angles == recs[i].joint_angles);
    EXPECT_TRUE(back[i].applied_torque == recs[i].applied_torque);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      EXPECT_TRUE(back[i].toe_positions[leg] == recs[i].toe_positions[leg]);
      EXPECT_EQ(back[i].toe_contacts[leg], recs[i].toe_contacts[leg]);
    }
    EXPECT_EQ(back[i].reward, recs[i].reward);
    EXPECT_EQ(back[i].termination, recs[i].termination);
  }
}

TEST(TrajectoryIo, OneJsonObjectPerLine) {
  const auto recs = random_records(3, 9);
  std::stringstream ss;
  write_trajectory(recs, ss);
  int lines = 0;
  std::string line;
  while (std::getline(ss, line)) {
    ++lines;
    EXPECT_EQ(line.front(), '{');
    EXPECT_EQ(line.back(), '}');
  }
  EXPECT_EQ(lines, 3);
}

TEST(TrajectoryIo, BadJsonNamesLine) {
  std::stringstream ss;
  write_trajectory(random_records(1, 1), ss);
  std::string good = ss.str();
  std::stringstream in(good + "not json\n");
  try {
    parse_trajectory(in, "dump.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(TrajectoryIo, MissingKeyAndWrongCounts) {
  {
    std::stringstream in(R"({"step":0})" "\n");
    EXPECT_THROW(parse_trajectory(in, "t"), ParseError);
  }
  {
    // truncate the joint vector
    std::stringstream ss;
    write_trajectory(random_records(1, 2), ss);
    std::string line = ss.str();
    const auto at = line.find("\"q\":[");
    ASSERT_NE(at, std::string::npos);
    const auto comma = line.find(',', at + 5);
    const auto close = line.find(']', at + 5);
    line = line.substr(0, comma) + line.substr(close);
    std::stringstream in(line);
    EXPECT_THROW(parse_trajectory(in, "t"), ParseError);
  }
}

TEST(TrajectoryIo, SaveLoadAndIoError) {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "qm_traj_test.jsonl";
  const auto recs = random_records(4, 13);
  save_trajectory(recs, path.string());
  const auto back = load_trajectory(path.string());
  EXPECT_EQ(back.size(), recs.size());
  EXPECT_EQ(back[3].termination, "time_limit");
  fs::remove(path);
  EXPECT_THROW(load_trajectory(path.string()), IoError);
  EXPECT_THROW(save_trajectory(recs, "/nonexistent-dir/x.jsonl"), IoError);
}

TEST(TrajectoryIo, BlankLinesSkipped) {
  std::stringstream ss;
  write_trajectory(random_records(2, 3), ss);
  std::stringstream in("\n" + ss.str() + "\n\n");
  EXPECT_EQ(parse_trajectory(in, "t").size(), 2u);
}

}  // namespace
}  // namespace quadmimic
