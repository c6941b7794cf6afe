#pragma once

#include "quadmimic/kinematics.hpp"
#include "quadmimic/mocap.hpp"
#include "quadmimic/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace quadmimic {

// One frame of labelled dog keypoints, world frame.
struct KeypointFrame {
  Vec3 shoulder_l = Vec3::Zero();
  Vec3 shoulder_r = Vec3::Zero();
  Vec3 shoulder_blade = Vec3::Zero();
  Vec3 haunch_l = Vec3::Zero();
  Vec3 haunch_r = Vec3::Zero();
  Vec3 foretoe_l = Vec3::Zero();
  Vec3 foretoe_r = Vec3::Zero();
  Vec3 hindtoe_l = Vec3::Zero();
  Vec3 hindtoe_r = Vec3::Zero();
};

// Keypoint file: header "fps=<int>", then 27 floats per line in the order of
// the KeypointFrame fields.
std::vector<KeypointFrame> load_keypoints(const std::string& path, double* fps_out);

// Base pose fit: position is the midpoint of the shoulder and haunch
// midpoints; forward points from haunches to shoulders; the shoulder blade
// disambiguates roll (it must end up above the fitted base plane). Throws
// GeometryError for degenerate keypoints.
std::pair<Vec3, Quat> base_from_keypoints(const KeypointFrame& f);

// Morphology-gap compensation applied during retargeting.
struct RetargetAdjust {
  double base_height_drop = 0.03;  // m, lowers the fitted base
  double leg_widen = 0.02;         // m, pushes toe targets outward laterally
};

// Keypoint trajectory -> joint-space clip. Toe targets are solved per frame
// with leg_ik; reach failures name the frame and leg. End effectors are the
// forward kinematics of the solved angles; velocities by finite differences.
MotionClip retarget_clip(const std::vector<KeypointFrame>& frames, double fps,
                         const RobotMorphology& morph, const RetargetAdjust& adjust,
                         ClipTerrainTag terrain, GaitTag gait);

}  // namespace quadmimic
