#pragma once

#include "quadmimic/kinematics.hpp"
#include "quadmimic/types.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace quadmimic {

enum class ClipTerrainTag { Plane, StairUp, StairDown, SlopeUp, SlopeDown };
enum class GaitTag { Walk, Run, FastRun };

const char* to_string(ClipTerrainTag t);
const char* to_string(GaitTag g);
ClipTerrainTag clip_terrain_tag_from_string(const std::string& s);
GaitTag gait_tag_from_string(const std::string& s);

// Capture scene constants the clips were recorded against.
inline constexpr double kSceneStairHeight = 0.16;
inline constexpr double kSceneStairDepth = 0.32;
inline constexpr int kSceneStairCount = 3;
inline constexpr double kSceneSlopeRad = 15.0 * M_PI / 180.0;

struct ReferencePose {
  Vec3 base_position = Vec3::Zero();
  Quat base_orientation = Quat::Identity();
  Vec3 base_linear_velocity = Vec3::Zero();   // world frame
  Vec3 base_angular_velocity = Vec3::Zero();  // world frame
  Vec12 joint_angles = Vec12::Zero();
  Vec12 joint_velocities = Vec12::Zero();
  std::array<Vec3, kNumLegs> end_effector_positions{};  // world frame
};

struct MotionClip {
  std::string name;
  double fps = 30.0;
  ClipTerrainTag terrain_tag = ClipTerrainTag::Plane;
  GaitTag gait_tag = GaitTag::Walk;
  std::vector<ReferencePose> frames;

  double duration() const { return (static_cast<double>(frames.size()) - 1.0) / fps; }

  // Throws ValidationError: empty clip, fps <= 0, non-unit quaternion.
  void validate() const;
};

// Clip text format: header "fps=<int> terrain=<tag> gait=<tag>", then one
// frame per line. 19 floats = base pos + quat wxyz + joint angles; 31 adds
// joint velocities; 43 adds end-effector positions. Missing joint velocities
// are filled by finite differences, missing end effectors by forward
// kinematics with the default morphology. Base velocities are always
// finite-differenced.
MotionClip load_clip(const std::string& path);
MotionClip parse_clip(std::istream& in, const std::string& name);
void save_clip(const MotionClip& clip, const std::string& path);
void write_clip(const MotionClip& clip, std::ostream& out);

// Linear interpolation between frames, slerp for orientation. t in seconds,
// [0, duration]; outside throws RangeError. Exact frame times return the
// stored frame.
ReferencePose sample_pose(const MotionClip& clip, double t);

// Future-target horizons ahead of the sample time, clamped to clip end.
inline constexpr std::array<double, 4> kFutureHorizons = {1.0 / 30.0, 1.0 / 15.0, 1.0 / 3.0,
                                                          1.0};

struct ReferenceWindow {
  std::array<ReferencePose, 4> targets;
};

ReferenceWindow future_targets(const MotionClip& clip, double t);

// Encoder features for one window: each target expressed relative to the
// current base position and yaw. Per target: position 3, orientation quat 4,
// linear velocity 3, angular velocity 3, joint angles 12, joint velocities
// 12, end effectors 12 -> 49; four targets -> 196.
inline constexpr int kWindowFeatureDim = 196;
VecX window_features(const ReferenceWindow& window, const Vec3& base_pos, double base_yaw);

// Procedural trot generator used to stand in for capture data.
struct GaitSpec {
  GaitTag gait = GaitTag::Walk;
  ClipTerrainTag terrain = ClipTerrainTag::Plane;
  double speed = 0.5;          // m/s forward
  double cycle_time = 0.64;    // s
  double duty_factor = 0.594;  // stance fraction of the cycle
  double duration = 2.0;       // s
  double fps = 30.0;
  double base_height = 0.38;   // m above local ground
  double swing_height = 0.06;  // m foot clearance
};

// Throws ValidationError for a spec that is not synthesizable (non-positive
// timing, duty outside (0,1)) and GeometryError if a foot target leaves the
// reachable shell.
MotionClip synthesize_gait(const GaitSpec& spec, const RobotMorphology& morph);

// Ground profile (height as a function of x) for a clip terrain tag.
double clip_terrain_height(ClipTerrainTag tag, double x);

struct DatasetManifest {
  // seconds of motion per (terrain tag, gait tag)
  std::map<std::string, std::map<std::string, double>> seconds;
  std::vector<std::string> skipped;  // unreadable files, with reasons
  double total_seconds = 0.0;
};

// Scans a directory for *.clip files, accumulating durations. Unreadable
// files are skipped and reported.
DatasetManifest dataset_manifest(const std::string& directory);
std::string manifest_to_json(const DatasetManifest& m);

}  // namespace quadmimic
