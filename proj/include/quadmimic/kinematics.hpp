#pragma once

#include "quadmimic/types.hpp"

#include <array>

namespace quadmimic {

struct JointLimit {
  double lo;
  double hi;
};

// Box body with four 3-DoF legs (hip roll, hip pitch, knee). Hip roll rotates
// the leg plane about the body x axis; the thigh mount sits hip_offset to the
// side of the hip within that rolled plane. Positive hip pitch swings the leg
// forward, the knee bends rearward (negative angle).
struct RobotMorphology {
  double body_length = 0.6;
  double body_width = 0.3;
  double hip_offset = 0.08;
  double thigh_length = 0.25;
  double shank_length = 0.25;
  double torque_limit_default = 20.0;
  std::array<Vec3, kNumLegs> hip_positions;        // base frame
  std::array<JointLimit, kNumJoints> joint_limits;

  static RobotMorphology defaults();

  double leg_reach() const { return thigh_length + shank_length; }
};

struct LegIkResult {
  Vec3 angles;         // roll, pitch, knee
  bool reachable;      // false: target clamped to the reachable shell
  bool within_limits;  // all three angles inside joint limits
};

// Analytic inverse kinematics for one leg. foot is in the base frame. An
// unreachable target is clamped to the nearest reachable point and flagged.
LegIkResult leg_ik(const Vec3& foot, int leg, const RobotMorphology& m);

// Toe position of one leg in the base frame.
Vec3 leg_forward_kinematics(const Vec3& q_leg, int leg, const RobotMorphology& m);

// Knee position of one leg in the base frame.
Vec3 leg_knee_position(const Vec3& q_leg, int leg, const RobotMorphology& m);

// d(toe position in base frame) / d(q_leg), columns = roll, pitch, knee.
Mat3 leg_jacobian(const Vec3& q_leg, int leg, const RobotMorphology& m);

// World-frame toe positions of all four legs.
std::array<Vec3, kNumLegs> forward_kinematics(const Vec3& base_pos, const Quat& base_rot,
                                              const Vec12& joint_angles,
                                              const RobotMorphology& m);

}  // namespace quadmimic
