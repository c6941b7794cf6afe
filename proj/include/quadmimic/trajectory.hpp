#pragma once

#include "quadmimic/robot_state.hpp"
#include "quadmimic/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace quadmimic {

// One policy step of a rollout, as written to line-delimited dumps.
struct TrajectoryRecord {
  int step = 0;
  double time = 0.0;
  Vec3 base_position = Vec3::Zero();
  Quat base_orientation = Quat::Identity();
  Vec3 base_linear_velocity = Vec3::Zero();
  Vec3 base_angular_velocity = Vec3::Zero();
  Vec12 joint_angles = Vec12::Zero();
  std::array<Vec3, kNumLegs> toe_positions{};
  std::array<bool, kNumLegs> toe_contacts{};
  Vec12 applied_torque = Vec12::Zero();
  double reward = 0.0;
  std::string termination = "none";
};

void write_trajectory(const std::vector<TrajectoryRecord>& records, std::ostream& out);
void save_trajectory(const std::vector<TrajectoryRecord>& records, const std::string& path);
std::vector<TrajectoryRecord> load_trajectory(const std::string& path);
std::vector<TrajectoryRecord> parse_trajectory(std::istream& in, const std::string& name);

}  // namespace quadmimic
