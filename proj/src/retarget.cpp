#include "quadmimic/retarget.hpp"

#include "quadmimic/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace quadmimic {

std::vector<KeypointFrame> load_keypoints(const std::string& path, double* fps_out) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open keypoint file '" + path + "'");
  const std::string name = std::filesystem::path(path).filename().string();

  std::string line;
  if (!std::getline(in, line)) throw ParseError(name + ": empty file");
  double fps = 0.0;
  {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok.rfind("fps=", 0) != 0) throw ParseError(name + ": header must be fps=<value>");
    try {
      fps = std::stod(tok.substr(4));
    } catch (const std::exception&) {
      throw ParseError(name + ": bad fps '" + tok + "'");
    }
  }
  if (fps <= 0) throw ValidationError(name + ": fps must be positive");
  if (fps_out) *fps_out = fps;

  std::vector<KeypointFrame> frames;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    if (v.empty()) continue;
    if (v.size() != 27) {
      throw ValidationError(name + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(v.size()) + " floats, expected 27");
    }
    KeypointFrame f;
    Vec3* fields[9] = {&f.shoulder_l, &f.shoulder_r, &f.shoulder_blade,
                       &f.haunch_l,   &f.haunch_r,   &f.foretoe_l,
                       &f.foretoe_r,  &f.hindtoe_l,  &f.hindtoe_r};
    for (int i = 0; i < 9; ++i) *fields[i] = Vec3(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
    frames.push_back(f);
  }
  if (frames.empty()) throw ValidationError(name + ": no frames");
  return frames;
}

std::pair<Vec3, Quat> base_from_keypoints(const KeypointFrame& f) {
  const Vec3 shoulder_mid = 0.5 * (f.shoulder_l + f.shoulder_r);
  const Vec3 haunch_mid = 0.5 * (f.haunch_l + f.haunch_r);
  const Vec3 pos = 0.5 * (shoulder_mid + haunch_mid);

  Vec3 fwd = shoulder_mid - haunch_mid;
  if (fwd.norm() < 1e-9) throw GeometryError("keypoints: shoulder and haunch midpoints coincide");
  fwd.normalize();

  Vec3 lat = f.shoulder_l - f.shoulder_r;
  lat -= lat.dot(fwd) * fwd;
  if (lat.norm() < 1e-9) throw GeometryError("keypoints: shoulders collinear with spine");
  lat.normalize();

  Vec3 up = fwd.cross(lat);
  // The blade sits on the back: flip roll if it landed below the base plane.
  if ((f.shoulder_blade - pos).dot(up) < 0.0) {
    lat = -lat;
    up = -up;
  }

  Mat3 rot;
  rot.col(0) = fwd;
  rot.col(1) = lat;
  rot.col(2) = up;
  Quat q(rot);
  q.normalize();
  return {pos, q};
}

MotionClip retarget_clip(const std::vector<KeypointFrame>& frames, double fps,
                         const RobotMorphology& morph, const RetargetAdjust& adjust,
                         ClipTerrainTag terrain, GaitTag gait) {
  if (frames.empty()) throw ValidationError("retarget: no keypoint frames");
  if (fps <= 0) throw ValidationError("retarget: fps must be positive");

  MotionClip clip;
  clip.name = "retargeted";
  clip.fps = fps;
  clip.terrain_tag = terrain;
  clip.gait_tag = gait;
  clip.frames.reserve(frames.size());

  for (size_t i = 0; i < frames.size(); ++i) {
    const KeypointFrame& kf = frames[i];
    auto [pos, rot] = base_from_keypoints(kf);
    pos.z() -= adjust.base_height_drop;

    ReferencePose pose;
    pose.base_position = pos;
    pose.base_orientation = rot;

    const Vec3* toes[kNumLegs] = {&kf.foretoe_l, &kf.foretoe_r, &kf.hindtoe_l, &kf.hindtoe_r};
    for (int leg = 0; leg < kNumLegs; ++leg) {
      Vec3 target = rot.inverse() * (*toes[leg] - pos);
      target.y() += leg_side(leg) * adjust.leg_widen;  // push outward
      const LegIkResult ik = leg_ik(target, leg, morph);
      if (!ik.reachable) {
        throw GeometryError("retarget: frame " + std::to_string(i) + " leg " +
                            std::to_string(leg) + " toe target unreachable");
      }
      pose.joint_angles.segment<3>(3 * leg) = ik.angles;
    }
    pose.end_effector_positions = forward_kinematics(pose.base_position,
                                                     pose.base_orientation,
                                                     pose.joint_angles, morph);
    clip.frames.push_back(pose);
  }

  // Velocities by finite differences, matching the clip loader.
  const double dt = 1.0 / fps;
  const size_t n = clip.frames.size();
  if (n >= 2) {
    auto& f = clip.frames;
    for (size_t i = 0; i < n; ++i) {
      const size_t lo = i == 0 ? 0 : i - 1;
      const size_t hi = i + 1 == n ? i : i + 1;
      const double span = (hi - lo) * dt;
      f[i].base_linear_velocity = (f[hi].base_position - f[lo].base_position) / span;
      f[i].base_angular_velocity =
          quat_log(f[hi].base_orientation * f[lo].base_orientation.inverse()) / span;
      f[i].joint_velocities = (f[hi].joint_angles - f[lo].joint_angles) / span;
    }
  }
  clip.validate();
  return clip;
}

}  // namespace quadmimic
