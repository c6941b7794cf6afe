#pragma once

#include "quadmimic/mocap.hpp"
#include "quadmimic/robot_state.hpp"
#include "quadmimic/terrain.hpp"
#include "quadmimic/types.hpp"

namespace quadmimic {

// Imitation term weights; they sum to 1.
struct ImitationWeights {
  double joint_pose = 0.6;
  double joint_velocity = 0.05;
  double end_effector = 0.1;
  double base_pose = 0.15;
  double base_velocity = 0.1;
};

struct RewardBreakdown {
  double joint_pose;      // exp(-sum (qhat - q)^2)
  double joint_velocity;  // exp(-0.1 sum (qdhat - qd)^2)
  double end_effector;    // exp(-40 sum |phat - p|^2)
  double base_pose;       // exp(-20 |phat - p|^2 - 10 angle(qhat, q))
  double base_velocity;   // exp(-2 |vhat - v|^2 - 0.2 |what - w|^2)
  double total;           // weighted sum
};

RewardBreakdown imitation_reward(const RobotState& s, const ReferencePose& ref,
                                 const ImitationWeights& w = {});

// Locomotion command: target heading (world yaw) and speed along it.
struct Command {
  double target_speed = 0.0;
  double target_yaw = 0.0;

  // (cos(yaw_err), sin(yaw_err), target_speed) given the robot's yaw.
  Vec3 encode(double robot_yaw) const;
};

// exp(-|vhat - v_t|) * exp(5 (cos(yaw_err) - 1)) where v_t is the base
// velocity projected onto the commanded heading.
double command_reward(const RobotState& s, const Command& c);

// -0.25 per toe in contact within 5 cm horizontally of a stair edge.
inline constexpr double kStairEdgePenaltyPerToe = -0.25;
inline constexpr double kStairEdgeMargin = 0.05;

double stair_edge_penalty(const std::array<Vec3, kNumLegs>& toe_positions,
                          const std::array<bool, kNumLegs>& toe_contacts,
                          const TerrainField& field);

}  // namespace quadmimic
