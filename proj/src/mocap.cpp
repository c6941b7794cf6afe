#include "quadmimic/mocap.hpp"

#include "quadmimic/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace quadmimic {

const char* to_string(ClipTerrainTag t) {
  switch (t) {
    case ClipTerrainTag::Plane: return "plane";
    case ClipTerrainTag::StairUp: return "stairup";
    case ClipTerrainTag::StairDown: return "stairdown";
    case ClipTerrainTag::SlopeUp: return "slopeup";
    case ClipTerrainTag::SlopeDown: return "slopedown";
  }
  return "plane";
}

const char* to_string(GaitTag g) {
  switch (g) {
    case GaitTag::Walk: return "walk";
    case GaitTag::Run: return "run";
    case GaitTag::FastRun: return "fastrun";
  }
  return "walk";
}

ClipTerrainTag clip_terrain_tag_from_string(const std::string& s) {
  if (s == "plane") return ClipTerrainTag::Plane;
  if (s == "stairup") return ClipTerrainTag::StairUp;
  if (s == "stairdown") return ClipTerrainTag::StairDown;
  if (s == "slopeup") return ClipTerrainTag::SlopeUp;
  if (s == "slopedown") return ClipTerrainTag::SlopeDown;
  throw ParseError("unknown terrain tag '" + s + "'");
}

GaitTag gait_tag_from_string(const std::string& s) {
  if (s == "walk") return GaitTag::Walk;
  if (s == "run") return GaitTag::Run;
  if (s == "fastrun") return GaitTag::FastRun;
  throw ParseError("unknown gait tag '" + s + "'");
}

void MotionClip::validate() const {
  if (fps <= 0.0) throw ValidationError("clip '" + name + "': fps must be positive");
  if (frames.empty()) throw ValidationError("clip '" + name + "': no frames");
  for (size_t i = 0; i < frames.size(); ++i) {
    const double n = frames[i].base_orientation.norm();
    if (std::abs(n - 1.0) > 1e-9) {
      throw ValidationError("clip '" + name + "': frame " + std::to_string(i) +
                            " quaternion norm " + std::to_string(n));
    }
  }
}

namespace {

std::vector<std::string> split_tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& where) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(where + ": bad float '" + tok + "'");
  }
  if (pos != tok.size()) throw ParseError(where + ": bad float '" + tok + "'");
  return v;
}

// Fills base velocities (always) and joint velocities (when absent) by
// finite differences; central in the interior, one-sided at the ends.
void fill_velocities(MotionClip& clip, bool have_joint_vels) {
  const size_t n = clip.frames.size();
  if (n < 2) return;
  const double dt = 1.0 / clip.fps;
  auto& f = clip.frames;
  for (size_t i = 0; i < n; ++i) {
    const size_t lo = i == 0 ? 0 : i - 1;
    const size_t hi = i + 1 == n ? i : i + 1;
    const double span = (hi - lo) * dt;
    f[i].base_linear_velocity = (f[hi].base_position - f[lo].base_position) / span;
    const Quat rel = f[hi].base_orientation * f[lo].base_orientation.inverse();
    f[i].base_angular_velocity = quat_log(rel) / span;
    if (!have_joint_vels) {
      f[i].joint_velocities = (f[hi].joint_angles - f[lo].joint_angles) / span;
    }
  }
}

}  // namespace

MotionClip parse_clip(std::istream& in, const std::string& name) {
  MotionClip clip;
  clip.name = name;

  std::string line;
  if (!std::getline(in, line)) throw ParseError(name + ": empty file");
  const auto header = split_tokens(line);
  if (header.size() != 3) throw ParseError(name + ": header needs fps=, terrain=, gait=");
  bool saw_fps = false, saw_terrain = false, saw_gait = false;
  for (const auto& tok : header) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError(name + ": bad header token '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "fps") {
      clip.fps = parse_double(val, name + ": header fps");
      saw_fps = true;
    } else if (key == "terrain") {
      clip.terrain_tag = clip_terrain_tag_from_string(val);
      saw_terrain = true;
    } else if (key == "gait") {
      clip.gait_tag = gait_tag_from_string(val);
      saw_gait = true;
    } else {
      throw ParseError(name + ": unknown header key '" + key + "'");
    }
  }
  if (!saw_fps || !saw_terrain || !saw_gait) {
    throw ParseError(name + ": header needs fps=, terrain=, gait=");
  }
  if (clip.fps <= 0) throw ValidationError(name + ": fps must be positive");

  size_t expected_cols = 0;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = split_tokens(line);
    if (toks.empty()) continue;
    if (expected_cols == 0) {
      if (toks.size() != 19 && toks.size() != 31 && toks.size() != 43) {
        throw ValidationError(name + ": line " + std::to_string(line_no) + " has " +
                              std::to_string(toks.size()) +
                              " columns, expected 19, 31 or 43");
      }
      expected_cols = toks.size();
    } else if (toks.size() != expected_cols) {
      throw ValidationError(name + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(toks.size()) + " columns, expected " +
                            std::to_string(expected_cols));
    }

    const std::string where = name + ": line " + std::to_string(line_no);
    std::vector<double> v(toks.size());
    for (size_t i = 0; i < toks.size(); ++i) {
      v[i] = parse_double(toks[i], where + " field " + std::to_string(i + 1));
    }

    ReferencePose pose;
    pose.base_position = Vec3(v[0], v[1], v[2]);
    pose.base_orientation = Quat(v[3], v[4], v[5], v[6]);  // w x y z
    for (int j = 0; j < kNumJoints; ++j) pose.joint_angles[j] = v[7 + j];
    if (expected_cols >= 31) {
      for (int j = 0; j < kNumJoints; ++j) pose.joint_velocities[j] = v[19 + j];
    }
    if (expected_cols == 43) {
      for (int leg = 0; leg < kNumLegs; ++leg) {
        pose.end_effector_positions[leg] =
            Vec3(v[31 + 3 * leg], v[32 + 3 * leg], v[33 + 3 * leg]);
      }
    }
    clip.frames.push_back(pose);
  }

  if (clip.frames.empty()) throw ValidationError(name + ": no frames");

  fill_velocities(clip, expected_cols >= 31);
  if (expected_cols < 43) {
    const RobotMorphology morph = RobotMorphology::defaults();
    for (auto& pose : clip.frames) {
      pose.end_effector_positions = forward_kinematics(pose.base_position,
                                                       pose.base_orientation,
                                                       pose.joint_angles, morph);
    }
  }
  clip.validate();
  return clip;
}

MotionClip load_clip(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open clip file '" + path + "'");
  return parse_clip(in, std::filesystem::path(path).filename().string());
}

void write_clip(const MotionClip& clip, std::ostream& out) {
  out << "fps=" << clip.fps << " terrain=" << to_string(clip.terrain_tag)
      << " gait=" << to_string(clip.gait_tag) << "\n";
  out << std::setprecision(17);
  for (const auto& f : clip.frames) {
    out << f.base_position.x() << ' ' << f.base_position.y() << ' ' << f.base_position.z();
    out << ' ' << f.base_orientation.w() << ' ' << f.base_orientation.x() << ' '
        << f.base_orientation.y() << ' ' << f.base_orientation.z();
    for (int j = 0; j < kNumJoints; ++j) out << ' ' << f.joint_angles[j];
    for (int j = 0; j < kNumJoints; ++j) out << ' ' << f.joint_velocities[j];
    for (int leg = 0; leg < kNumLegs; ++leg) {
      out << ' ' << f.end_effector_positions[leg].x() << ' '
          << f.end_effector_positions[leg].y() << ' ' << f.end_effector_positions[leg].z();
    }
    out << "\n";
  }
}

void save_clip(const MotionClip& clip, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write clip file '" + path + "'");
  write_clip(clip, out);
}

ReferencePose sample_pose(const MotionClip& clip, double t) {
  const double dur = clip.duration();
  if (t < -1e-9 || t > dur + 1e-9) {
    throw RangeError("sample time " + std::to_string(t) + " outside clip [0, " +
                     std::to_string(dur) + "]");
  }
  t = std::clamp(t, 0.0, dur);
  if (clip.frames.size() == 1) return clip.frames[0];

  double u = t * clip.fps;
  int k = static_cast<int>(std::floor(u));
  k = std::clamp(k, 0, static_cast<int>(clip.frames.size()) - 2);
  double a = u - k;
  if (a < 1e-9) return clip.frames[k];
  if (a > 1.0 - 1e-9) return clip.frames[k + 1];

  const ReferencePose& f0 = clip.frames[k];
  const ReferencePose& f1 = clip.frames[k + 1];
  ReferencePose out;
  out.base_position = (1.0 - a) * f0.base_position + a * f1.base_position;
  out.base_orientation = f0.base_orientation.slerp(a, f1.base_orientation);
  out.base_linear_velocity = (1.0 - a) * f0.base_linear_velocity + a * f1.base_linear_velocity;
  out.base_angular_velocity =
      (1.0 - a) * f0.base_angular_velocity + a * f1.base_angular_velocity;
  out.joint_angles = (1.0 - a) * f0.joint_angles + a * f1.joint_angles;
  out.joint_velocities = (1.0 - a) * f0.joint_velocities + a * f1.joint_velocities;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    out.end_effector_positions[leg] = (1.0 - a) * f0.end_effector_positions[leg] +
                                      a * f1.end_effector_positions[leg];
  }
  return out;
}

ReferenceWindow future_targets(const MotionClip& clip, double t) {
  if (t < -1e-9) throw RangeError("future_targets: negative time");
  const double dur = clip.duration();
  ReferenceWindow w;
  for (size_t i = 0; i < kFutureHorizons.size(); ++i) {
    w.targets[i] = sample_pose(clip, std::min(t + kFutureHorizons[i], dur));
  }
  return w;
}

VecX window_features(const ReferenceWindow& window, const Vec3& base_pos, double base_yaw) {
  const Quat yaw_rot(Eigen::AngleAxisd(base_yaw, Vec3::UnitZ()));
  const Quat yaw_inv = yaw_rot.inverse();
  VecX feat(kWindowFeatureDim);
  int at = 0;
  for (const ReferencePose& p : window.targets) {
    feat.segment<3>(at) = yaw_inv * (p.base_position - base_pos);
    at += 3;
    Quat rel = yaw_inv * p.base_orientation;
    if (rel.w() < 0) rel.coeffs() *= -1.0;
    feat[at + 0] = rel.w();
    feat[at + 1] = rel.x();
    feat[at + 2] = rel.y();
    feat[at + 3] = rel.z();
    at += 4;
    feat.segment<3>(at) = yaw_inv * p.base_linear_velocity;
    at += 3;
    feat.segment<3>(at) = yaw_inv * p.base_angular_velocity;
    at += 3;
    feat.segment<12>(at) = p.joint_angles;
    at += 12;
    feat.segment<12>(at) = p.joint_velocities;
    at += 12;
    for (int leg = 0; leg < kNumLegs; ++leg) {
      feat.segment<3>(at) = yaw_inv * (p.end_effector_positions[leg] - base_pos);
      at += 3;
    }
  }
  return feat;
}

double clip_terrain_height(ClipTerrainTag tag, double x) {
  switch (tag) {
    case ClipTerrainTag::Plane:
      return 0.0;
    case ClipTerrainTag::SlopeUp:
      return std::tan(kSceneSlopeRad) * std::max(x, 0.0);
    case ClipTerrainTag::SlopeDown:
      return -std::tan(kSceneSlopeRad) * std::max(x, 0.0);
    case ClipTerrainTag::StairUp:
    case ClipTerrainTag::StairDown: {
      const double steps = std::clamp(std::floor(x / kSceneStairDepth) + 1.0, 0.0,
                                      static_cast<double>(kSceneStairCount));
      const double h = kSceneStairHeight * steps;
      return tag == ClipTerrainTag::StairUp ? h : -h;
    }
  }
  return 0.0;
}

namespace {

// Linearized version of the stair profile so the base glides instead of
// jumping at risers.
double base_ramp(ClipTerrainTag tag, double x) {
  switch (tag) {
    case ClipTerrainTag::Plane:
    case ClipTerrainTag::SlopeUp:
    case ClipTerrainTag::SlopeDown:
      return clip_terrain_height(tag, x);
    case ClipTerrainTag::StairUp:
    case ClipTerrainTag::StairDown: {
      const double steps =
          std::clamp(x / kSceneStairDepth, 0.0, static_cast<double>(kSceneStairCount));
      const double h = kSceneStairHeight * steps;
      return tag == ClipTerrainTag::StairUp ? h : -h;
    }
  }
  return 0.0;
}

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }

// Base pitch follows the ramp gradient so both hip pairs stay on the ramp
// line. Central difference over a window keeps the pitch continuous across
// ramp boundaries.
double base_pitch(ClipTerrainTag tag, double x) {
  const double w = 0.15;
  const double g = (base_ramp(tag, x + w) - base_ramp(tag, x - w)) / (2.0 * w);
  return std::atan(g);
}

}  // namespace

MotionClip synthesize_gait(const GaitSpec& spec, const RobotMorphology& morph) {
  if (spec.cycle_time <= 0 || spec.duration <= 0 || spec.fps <= 0) {
    throw ValidationError("gait spec: timing values must be positive");
  }
  if (spec.duty_factor <= 0.0 || spec.duty_factor >= 1.0) {
    throw ValidationError("gait spec: duty factor must lie in (0, 1)");
  }
  if (spec.base_height <= 0.0 || spec.base_height > morph.leg_reach()) {
    throw ValidationError("gait spec: base height outside standable range");
  }

  // Trot: diagonal pairs share phase.
  const std::array<double, kNumLegs> phase_offset = {0.0, 0.5, 0.5, 0.0};
  const double T = spec.cycle_time;
  const double duty = spec.duty_factor;

  auto anchor = [&](int leg, double k) {
    // Place stance anchor so the foot sits under the hip at mid-stance.
    const double t_td = T * (k - phase_offset[leg]);
    const double ax = morph.hip_positions[leg].x() + spec.speed * (t_td + 0.5 * duty * T);
    const double ay =
        morph.hip_positions[leg].y() + leg_side(leg) * morph.hip_offset;
    return Vec3(ax, ay, clip_terrain_height(spec.terrain, ax));
  };

  MotionClip clip;
  clip.name = std::string("synth-") + to_string(spec.gait) + "-" + to_string(spec.terrain);
  clip.fps = spec.fps;
  clip.terrain_tag = spec.terrain;
  clip.gait_tag = spec.gait;

  const int n_frames = static_cast<int>(std::lround(spec.duration * spec.fps)) + 1;
  clip.frames.reserve(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    const double t = i / spec.fps;
    ReferencePose pose;
    const double bx = spec.speed * t;
    pose.base_position = Vec3(bx, 0.0, spec.base_height + base_ramp(spec.terrain, bx));
    // nose up on climbs: negative rotation about +y raises +x
    pose.base_orientation =
        Quat(Eigen::AngleAxisd(-base_pitch(spec.terrain, bx), Vec3::UnitY()));

    for (int leg = 0; leg < kNumLegs; ++leg) {
      const double u = t / T + phase_offset[leg];
      const double k = std::floor(u);
      const double phi = u - k;
      Vec3 foot;
      if (phi < duty) {
        foot = anchor(leg, k);
      } else {
        const Vec3 a0 = anchor(leg, k);
        const Vec3 a1 = anchor(leg, k + 1.0);
        const double s = (phi - duty) / (1.0 - duty);
        const double h = smoothstep(s);
        foot = a0 + h * (a1 - a0);
        foot.z() += spec.swing_height * 0.5 * (1.0 - std::cos(2.0 * M_PI * s));
      }
      const Vec3 foot_base =
          pose.base_orientation.inverse() * (foot - pose.base_position);
      const LegIkResult ik = leg_ik(foot_base, leg, morph);
      if (!ik.reachable) {
        throw GeometryError("gait synthesis: frame " + std::to_string(i) + " leg " +
                            std::to_string(leg) + " target unreachable");
      }
      pose.joint_angles.segment<3>(3 * leg) = ik.angles;
    }
    pose.end_effector_positions = forward_kinematics(pose.base_position,
                                                     pose.base_orientation,
                                                     pose.joint_angles, morph);
    clip.frames.push_back(pose);
  }

  fill_velocities(clip, false);
  clip.validate();
  return clip;
}

DatasetManifest dataset_manifest(const std::string& directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) {
    throw IoError("manifest: '" + directory + "' is not a directory");
  }
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".clip") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());

  DatasetManifest manifest;
  for (const auto& p : paths) {
    try {
      const MotionClip clip = load_clip(p.string());
      const double secs = clip.duration();
      manifest.seconds[to_string(clip.terrain_tag)][to_string(clip.gait_tag)] += secs;
      manifest.total_seconds += secs;
    } catch (const std::exception& e) {
      manifest.skipped.push_back(p.filename().string() + ": " + e.what());
    }
  }
  return manifest;
}

std::string manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["seconds_by_terrain"] = nlohmann::ordered_json::object();
  for (const auto& [terr, gaits] : m.seconds) {
    for (const auto& [gait, secs] : gaits) {
      j["seconds_by_terrain"][terr][gait] = secs;
    }
  }
  j["total_seconds"] = m.total_seconds;
  j["skipped"] = m.skipped;
  return j.dump(2);
}

}  // namespace quadmimic
