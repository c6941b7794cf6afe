#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>

namespace quadmimic {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using MatX = Eigen::MatrixXd;
using Quat = Eigen::Quaterniond;

// Leg order used everywhere: fore-left, fore-right, hind-left, hind-right.
// Joint j of leg l lives at index 3*l + j with j in {roll, pitch, knee}.
inline constexpr int kNumLegs = 4;
inline constexpr int kNumJoints = 12;
inline constexpr int kForeLeft = 0;
inline constexpr int kForeRight = 1;
inline constexpr int kHindLeft = 2;
inline constexpr int kHindRight = 3;

inline constexpr double kGravity = 9.81;

// Policy-facing dimensional contract.
inline constexpr int kProprioFrameDim = 45;
inline constexpr int kProprioHistory = 3;
inline constexpr int kProprioDim = kProprioFrameDim * kProprioHistory;  // 135
inline constexpr int kExteroRows = 64;   // along heading, 1.0 m span
inline constexpr int kExteroCols = 16;   // lateral, 0.5 m span
inline constexpr int kExteroDim = kExteroRows * kExteroCols;  // 1024
inline constexpr int kLatentDim = 8;
inline constexpr int kActionDim = 12;
inline constexpr int kCommandDim = 3;

inline constexpr double kPolicyDt = 0.02;   // 50 Hz policy
inline constexpr double kPhysicsDt = 0.002; // 500 Hz PD / integration
inline constexpr int kSubsteps = 10;

// +1 for left legs, -1 for right legs.
inline double leg_side(int leg) { return (leg == kForeLeft || leg == kHindLeft) ? 1.0 : -1.0; }
inline bool leg_is_fore(int leg) { return leg == kForeLeft || leg == kForeRight; }

inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0) a += 2.0 * M_PI;
  return a - M_PI;
}

// Yaw / pitch / roll of a body orientation, ZYX convention.
inline double quat_yaw(const Quat& q) {
  return std::atan2(2.0 * (q.w() * q.z() + q.x() * q.y()),
                    1.0 - 2.0 * (q.y() * q.y() + q.z() * q.z()));
}
inline double quat_pitch(const Quat& q) {
  double s = 2.0 * (q.w() * q.y() - q.z() * q.x());
  s = std::clamp(s, -1.0, 1.0);
  return std::asin(s);
}
inline double quat_roll(const Quat& q) {
  return std::atan2(2.0 * (q.w() * q.x() + q.y() * q.z()),
                    1.0 - 2.0 * (q.x() * q.x() + q.y() * q.y()));
}

// Geodesic angle between two orientations, insensitive to double cover.
// atan2 form keeps full precision near zero where acos loses half the digits.
inline double quat_angle(const Quat& a, const Quat& b) {
  const Quat r = a.conjugate() * b;
  return 2.0 * std::atan2(r.vec().norm(), std::abs(r.w()));
}

// exp map: rotation vector -> quaternion.
inline Quat quat_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-12) {
    Quat q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    q.normalize();
    return q;
  }
  const Vec3 axis = w / angle;
  return Quat(Eigen::AngleAxisd(angle, axis));
}

// log map: relative rotation a->b as a rotation vector.
inline Vec3 quat_log(const Quat& q_in) {
  Quat q = q_in;
  if (q.w() < 0) q.coeffs() *= -1.0;
  const double vn = q.vec().norm();
  if (vn < 1e-12) return 2.0 * q.vec();
  const double angle = 2.0 * std::atan2(vn, q.w());
  return (angle / vn) * q.vec();
}

}  // namespace quadmimic
