#include "quadmimic/rewards.hpp"

#include <cmath>

namespace quadmimic {

RewardBreakdown imitation_reward(const RobotState& s, const ReferencePose& ref,
                                 const ImitationWeights& w) {
  RewardBreakdown r;

  r.joint_pose = std::exp(-(ref.joint_angles - s.joint_angles).squaredNorm());
  r.joint_velocity =
      std::exp(-0.1 * (ref.joint_velocities - s.joint_velocities).squaredNorm());

  double ee = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    ee += (ref.end_effector_positions[leg] - s.toe_positions[leg]).squaredNorm();
  }
  r.end_effector = std::exp(-40.0 * ee);

  const double pos_err = (ref.base_position - s.base_position).squaredNorm();
  const double ang_err = quat_angle(ref.base_orientation, s.base_orientation);
  r.base_pose = std::exp(-20.0 * pos_err - 10.0 * ang_err);

  const double lin_err = (ref.base_linear_velocity - s.base_linear_velocity).squaredNorm();
  const double ang_vel_err =
      (ref.base_angular_velocity - s.base_angular_velocity).squaredNorm();
  r.base_velocity = std::exp(-2.0 * lin_err - 0.2 * ang_vel_err);

  r.total = w.joint_pose * r.joint_pose + w.joint_velocity * r.joint_velocity +
            w.end_effector * r.end_effector + w.base_pose * r.base_pose +
            w.base_velocity * r.base_velocity;
  return r;
}

Vec3 Command::encode(double robot_yaw) const {
  const double err = target_yaw - robot_yaw;
  return Vec3(std::cos(err), std::sin(err), target_speed);
}

double command_reward(const RobotState& s, const Command& c) {
  const double yaw = quat_yaw(s.base_orientation);
  const double yaw_err = c.target_yaw - yaw;
  const double v_along = s.base_linear_velocity.x() * std::cos(c.target_yaw) +
                         s.base_linear_velocity.y() * std::sin(c.target_yaw);
  return std::exp(-std::abs(c.target_speed - v_along)) *
         std::exp(5.0 * (std::cos(yaw_err) - 1.0));
}

double stair_edge_penalty(const std::array<Vec3, kNumLegs>& toe_positions,
                          const std::array<bool, kNumLegs>& toe_contacts,
                          const TerrainField& field) {
  double penalty = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (!toe_contacts[leg]) continue;
    const double d =
        field.nearest_stair_edge_distance(toe_positions[leg].x(), toe_positions[leg].y());
    if (d < kStairEdgeMargin) penalty += kStairEdgePenaltyPerToe;
  }
  return penalty;
}

}  // namespace quadmimic
