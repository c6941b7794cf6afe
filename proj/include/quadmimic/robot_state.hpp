#pragma once

#include "quadmimic/types.hpp"

#include <array>

namespace quadmimic {

// Full simulator state of the robot at one policy tick.
struct RobotState {
  Vec3 base_position = Vec3::Zero();
  Quat base_orientation = Quat::Identity();
  Vec3 base_linear_velocity = Vec3::Zero();   // world frame
  Vec3 base_angular_velocity = Vec3::Zero();  // world frame
  Vec12 joint_angles = Vec12::Zero();
  Vec12 joint_velocities = Vec12::Zero();
  std::array<Vec3, kNumLegs> toe_positions{};       // world frame
  std::array<Vec3, kNumLegs> toe_velocities{};      // world frame
  std::array<bool, kNumLegs> toe_contacts{};
  Vec12 last_action = Vec12::Zero();
};

// One history entry of the proprioceptive stack.
struct ProprioFrame {
  Vec3 linear_velocity = Vec3::Zero();   // base frame
  Vec3 angular_velocity = Vec3::Zero();  // base frame
  Vec12 joint_angles = Vec12::Zero();
  Vec12 joint_velocities = Vec12::Zero();
  Vec12 last_action = Vec12::Zero();
  Quat orientation = Quat::Identity();   // used to rotate gravity into base frame
};

// Stacks 3 frames, oldest first; each frame contributes 45 entries:
// velocities 6, joint angles 12, joint velocities 12, last action 12,
// base-frame gravity direction 3.
VecX assemble_proprio(const std::array<ProprioFrame, kProprioHistory>& history,
                      const Vec3& gravity_world);

ProprioFrame proprio_frame_from_state(const RobotState& s);

}  // namespace quadmimic
