#include "quadmimic/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace quadmimic {

RobotMorphology RobotMorphology::defaults() {
  RobotMorphology m;
  const double hx = 0.5 * m.body_length;
  const double hy = 0.5 * m.body_width;
  m.hip_positions[kForeLeft] = Vec3(hx, hy, 0.0);
  m.hip_positions[kForeRight] = Vec3(hx, -hy, 0.0);
  m.hip_positions[kHindLeft] = Vec3(-hx, hy, 0.0);
  m.hip_positions[kHindRight] = Vec3(-hx, -hy, 0.0);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    m.joint_limits[3 * leg + 0] = {-0.8, 0.8};   // hip roll
    m.joint_limits[3 * leg + 1] = {-1.6, 1.6};   // hip pitch
    m.joint_limits[3 * leg + 2] = {-2.6, 0.0};   // knee, rearward only
  }
  return m;
}

namespace {

// Direction of the leg segment at in-plane angle a (0 = straight down),
// expressed in the rolled hip frame before applying the roll rotation.
inline Vec3 sagittal_dir(double a) { return Vec3(std::sin(a), 0.0, -std::cos(a)); }

}  // namespace

Vec3 leg_forward_kinematics(const Vec3& q_leg, int leg, const RobotMorphology& m) {
  const double s = leg_side(leg);
  const Mat3 roll = Eigen::AngleAxisd(q_leg[0], Vec3::UnitX()).toRotationMatrix();
  const Vec3 mount = m.hip_positions[leg] + roll * Vec3(0.0, s * m.hip_offset, 0.0);
  return mount + roll * (m.thigh_length * sagittal_dir(q_leg[1]) +
                         m.shank_length * sagittal_dir(q_leg[1] + q_leg[2]));
}

Vec3 leg_knee_position(const Vec3& q_leg, int leg, const RobotMorphology& m) {
  const double s = leg_side(leg);
  const Mat3 roll = Eigen::AngleAxisd(q_leg[0], Vec3::UnitX()).toRotationMatrix();
  const Vec3 mount = m.hip_positions[leg] + roll * Vec3(0.0, s * m.hip_offset, 0.0);
  return mount + roll * (m.thigh_length * sagittal_dir(q_leg[1]));
}

Mat3 leg_jacobian(const Vec3& q_leg, int leg, const RobotMorphology& m) {
  const double p = q_leg[1];
  const double pk = q_leg[1] + q_leg[2];
  const double l1 = m.thigh_length;
  const double l2 = m.shank_length;
  const Mat3 roll = Eigen::AngleAxisd(q_leg[0], Vec3::UnitX()).toRotationMatrix();

  Mat3 jac;
  // Everything distal to the hip rotates about base x.
  const Vec3 toe = leg_forward_kinematics(q_leg, leg, m);
  jac.col(0) = Vec3::UnitX().cross(toe - m.hip_positions[leg]);
  jac.col(1) = roll * Vec3(l1 * std::cos(p) + l2 * std::cos(pk), 0.0,
                           l1 * std::sin(p) + l2 * std::sin(pk));
  jac.col(2) = roll * Vec3(l2 * std::cos(pk), 0.0, l2 * std::sin(pk));
  return jac;
}

LegIkResult leg_ik(const Vec3& foot, int leg, const RobotMorphology& m) {
  const double s = leg_side(leg);
  const double d = m.hip_offset;
  const double l1 = m.thigh_length;
  const double l2 = m.shank_length;
  const Vec3 v = foot - m.hip_positions[leg];

  LegIkResult out;
  out.reachable = true;

  // Roll: choose the branch that keeps the foot below the lateral mount.
  // The leg plane sits at signed offset s*d from the hip along the rolled y.
  const double rho = std::hypot(v.y(), v.z());
  double roll;
  if (rho < 1e-12) {
    roll = 0.0;
    out.reachable = false;
  } else {
    const double c = s * d / rho;
    if (std::abs(c) > 1.0) out.reachable = false;
    const double phi = std::atan2(v.z(), v.y());
    roll = wrap_angle(phi + std::acos(std::clamp(c, -1.0, 1.0)));
  }

  const Mat3 r = Eigen::AngleAxisd(roll, Vec3::UnitX()).toRotationMatrix();
  const Vec3 vp = r.transpose() * v;  // y component == s*d when feasible
  double x = vp.x();
  double z = vp.z();

  double reach = std::hypot(x, z);
  const double reach_min = std::abs(l1 - l2);
  const double reach_max = l1 + l2;
  if (reach < reach_min || reach > reach_max) {
    out.reachable = false;
    if (reach < 1e-12) {
      x = 0.0;
      z = -reach_min;
    } else {
      const double rc = std::clamp(reach, reach_min, reach_max);
      x *= rc / reach;
      z *= rc / reach;
    }
    reach = std::hypot(x, z);
  }

  const double cos_knee =
      std::clamp((reach * reach - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double knee = -std::acos(cos_knee);
  const double pitch = std::atan2(x, -z) -
                       std::atan2(l2 * std::sin(knee), l1 + l2 * std::cos(knee));

  out.angles = Vec3(roll, wrap_angle(pitch), knee);
  out.within_limits = true;
  for (int j = 0; j < 3; ++j) {
    const JointLimit& lim = m.joint_limits[3 * leg + j];
    if (out.angles[j] < lim.lo || out.angles[j] > lim.hi) out.within_limits = false;
  }
  return out;
}

std::array<Vec3, kNumLegs> forward_kinematics(const Vec3& base_pos, const Quat& base_rot,
                                              const Vec12& joint_angles,
                                              const RobotMorphology& m) {
  std::array<Vec3, kNumLegs> toes;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 q_leg = joint_angles.segment<3>(3 * leg);
    toes[leg] = base_pos + base_rot * leg_forward_kinematics(q_leg, leg, m);
  }
  return toes;
}

}  // namespace quadmimic
