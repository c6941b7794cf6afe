#include "quadmimic/simenv.hpp"

#include "quadmimic/errors.hpp"

#include <algorithm>
#include <cmath>

namespace quadmimic {

const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::None: return "none";
    case TerminationReason::RollLimit: return "roll_limit";
    case TerminationReason::PitchLimit: return "pitch_limit";
    case TerminationReason::BodyContact: return "body_contact";
    case TerminationReason::TimeLimit: return "time_limit";
  }
  return "none";
}

DomainParams DomainParams::sample(Rng& rng) {
  DomainParams p;
  p.friction = rng.uniform(0.5, 1.2);
  p.torque_limit = rng.uniform(16.0, 23.0);
  p.base_mass_scale = rng.uniform(0.7, 1.3);
  p.perception_noise_std = kPerceptionNoiseStd;
  // sequenced: argument evaluation order would be compiler-dependent
  const double cx = rng.uniform(-0.01, 0.01);
  const double cy = rng.uniform(-0.01, 0.01);
  const double cz = rng.uniform(-0.01, 0.01);
  p.com_offset = Vec3(cx, cy, cz);
  return p;
}

DomainParams DomainParams::nominal() { return DomainParams{}; }

VecX assemble_proprio(const std::array<ProprioFrame, kProprioHistory>& history,
                      const Vec3& gravity_world) {
  VecX o(kProprioDim);
  int at = 0;
  for (const ProprioFrame& f : history) {
    o.segment<3>(at) = f.linear_velocity;
    o.segment<3>(at + 3) = f.angular_velocity;
    o.segment<12>(at + 6) = f.joint_angles;
    o.segment<12>(at + 18) = f.joint_velocities;
    o.segment<12>(at + 30) = f.last_action;
    o.segment<3>(at + 42) = f.orientation.inverse() * gravity_world;
    at += kProprioFrameDim;
  }
  return o;
}

ProprioFrame proprio_frame_from_state(const RobotState& s) {
  ProprioFrame f;
  const Quat inv = s.base_orientation.inverse();
  f.linear_velocity = inv * s.base_linear_velocity;
  f.angular_velocity = inv * s.base_angular_velocity;
  f.joint_angles = s.joint_angles;
  f.joint_velocities = s.joint_velocities;
  f.last_action = s.last_action;
  f.orientation = s.base_orientation;
  return f;
}

double pd_torque(double target, double q, double qd, double kp, double kd, double limit,
                 bool* clamped) {
  const double raw = kp * (target - q) - kd * qd;
  const double out = std::clamp(raw, -limit, limit);
  if (clamped) *clamped = raw != out;
  return out;
}

std::array<Vec3, 12> body_sample_points(const RobotState& s, const SimConfig& cfg) {
  std::array<Vec3, 12> pts;
  const Vec3 half = 0.5 * cfg.base_box;
  int at = 0;
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sz : {-1, 1}) {
        pts[at++] = s.base_position +
                    s.base_orientation * Vec3(sx * half.x(), sy * half.y(), sz * half.z());
      }
    }
  }
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 knee =
        leg_knee_position(s.joint_angles.segment<3>(3 * leg), leg, cfg.morphology);
    pts[at++] = s.base_position + s.base_orientation * knee;
  }
  return pts;
}

TerminationReason check_termination(const RobotState& s, const TerrainField& field,
                                    const SimConfig& cfg, int steps_taken) {
  if (std::abs(quat_roll(s.base_orientation)) > cfg.roll_limit) {
    return TerminationReason::RollLimit;
  }
  if (std::abs(quat_pitch(s.base_orientation)) > cfg.pitch_limit) {
    return TerminationReason::PitchLimit;
  }
  for (const Vec3& p : body_sample_points(s, cfg)) {
    if (p.z() < field.height_at(p.x(), p.y())) return TerminationReason::BodyContact;
  }
  if (steps_taken >= cfg.max_episode_steps) return TerminationReason::TimeLimit;
  return TerminationReason::None;
}

SimEnv::SimEnv(SimConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.substeps < 1 || cfg_.policy_dt <= 0) {
    throw ValidationError("sim config: bad timing");
  }
}

void SimEnv::refresh_toes() {
  const Quat& rot = state_.base_orientation;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 q_leg = state_.joint_angles.segment<3>(3 * leg);
    const Vec3 toe_base = leg_forward_kinematics(q_leg, leg, cfg_.morphology);
    const Vec3 offset = rot * toe_base;
    state_.toe_positions[leg] = state_.base_position + offset;
    const Vec3 qd_leg = state_.joint_velocities.segment<3>(3 * leg);
    state_.toe_velocities[leg] = state_.base_linear_velocity +
                                 state_.base_angular_velocity.cross(offset) +
                                 rot * (leg_jacobian(q_leg, leg, cfg_.morphology) * qd_leg);
    const double ground =
        terrain_.height_at(state_.toe_positions[leg].x(), state_.toe_positions[leg].y());
    state_.toe_contacts[leg] =
        state_.toe_positions[leg].z() - ground <= cfg_.toe_contact_tolerance &&
        state_.toe_velocities[leg].z() <= cfg_.toe_separation_speed;
  }
}

void SimEnv::refresh_observation() {
  obs_.proprio = assemble_proprio(history_, Vec3(0, 0, -kGravity));
  obs_.extero = sample_patch(terrain_, state_.base_position,
                             quat_yaw(state_.base_orientation),
                             domain_.perception_noise_std, rng_);
}

void SimEnv::reset(const TerrainField& terrain, uint64_t seed, const RobotState& init) {
  terrain_ = terrain;
  rng_ = Rng(seed);
  domain_ = cfg_.randomize_domain ? DomainParams::sample(rng_) : DomainParams::nominal();
  state_ = init;
  steps_ = 0;
  termination_ = TerminationReason::None;
  applied_torque_.setZero();
  torque_clamped_.fill(false);
  contact_normal_force_.fill(0.0);

  refresh_toes();
  for (const Vec3& p : body_sample_points(state_, cfg_)) {
    if (p.z() < terrain_.height_at(p.x(), p.y()) - 1e-9) {
      throw ValidationError("reset: body point below terrain at x=" +
                            std::to_string(p.x()) + " y=" + std::to_string(p.y()));
    }
  }
  for (int leg = 0; leg < kNumLegs; ++leg) {
    contact_anchor_[leg] =
        state_.toe_contacts[leg]
            ? std::optional<Vec2>(state_.toe_positions[leg].head<2>())
            : std::nullopt;
  }

  history_.fill(proprio_frame_from_state(state_));
  refresh_observation();
  live_ = true;
}

TerminationReason SimEnv::step(const Vec12& action) {
  if (!live_) throw StateError("step before reset");
  if (termination_ != TerminationReason::None) {
    throw StateError("step after termination");
  }

  const double dt = cfg_.physics_dt();
  const double mass = cfg_.base_mass * domain_.base_mass_scale;
  const Vec3 box = cfg_.base_box;
  const Vec3 inertia_diag(mass / 12.0 * (box.y() * box.y() + box.z() * box.z()),
                          mass / 12.0 * (box.x() * box.x() + box.z() * box.z()),
                          mass / 12.0 * (box.x() * box.x() + box.y() * box.y()));

  for (int sub = 0; sub < cfg_.substeps; ++sub) {
    const Quat rot = state_.base_orientation;
    const Vec3 com = state_.base_position + rot * domain_.com_offset;

    Vec3 force = Vec3(0, 0, -kGravity * mass);
    Vec3 torque = Vec3::Zero();
    Vec12 tau = Vec12::Zero();

    for (int j = 0; j < kNumJoints; ++j) {
      bool clamped = false;
      tau[j] = pd_torque(action[j], state_.joint_angles[j], state_.joint_velocities[j],
                         cfg_.kp, cfg_.kd, domain_.torque_limit, &clamped);
      if (sub == cfg_.substeps - 1) {
        applied_torque_[j] = tau[j];
        torque_clamped_[j] = clamped;
      }
    }

    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Vec3 q_leg = state_.joint_angles.segment<3>(3 * leg);
      const Vec3 qd_leg = state_.joint_velocities.segment<3>(3 * leg);
      const Mat3 jac = leg_jacobian(q_leg, leg, cfg_.morphology);
      const Vec3 offset = rot * leg_forward_kinematics(q_leg, leg, cfg_.morphology);
      const Vec3 toe = state_.base_position + offset;
      const Vec3 toe_vel = state_.base_linear_velocity +
                           state_.base_angular_velocity.cross(offset) +
                           rot * (jac * qd_leg);

      const double ground = terrain_.height_at(toe.x(), toe.y());
      const double pen = ground - toe.z();
      Vec3 f = Vec3::Zero();
      if (pen >= 0.0) {
        if (!contact_anchor_[leg]) contact_anchor_[leg] = toe.head<2>();
        double fn = cfg_.contact_normal_stiffness * pen -
                    cfg_.contact_normal_damping * toe_vel.z();
        fn = std::max(fn, 0.0);
        Vec2 ft = -cfg_.contact_tangent_stiffness * (toe.head<2>() - *contact_anchor_[leg]) -
                  cfg_.contact_tangent_damping * toe_vel.head<2>();
        const double ft_max = domain_.friction * fn;
        const double ft_norm = ft.norm();
        if (ft_norm > ft_max && ft_norm > 1e-12) {
          ft *= ft_max / ft_norm;
          // slide the anchor so the spring agrees with the cone force
          contact_anchor_[leg] =
              toe.head<2>() +
              (ft + cfg_.contact_tangent_damping * toe_vel.head<2>()) /
                  cfg_.contact_tangent_stiffness;
        }
        f = Vec3(ft.x(), ft.y(), fn);
        contact_normal_force_[leg] = fn;
      } else {
        contact_anchor_[leg].reset();
        contact_normal_force_[leg] = 0.0;
      }

      force += f;
      torque += (toe - com).cross(f);
      tau.segment<3>(3 * leg) += jac.transpose() * (rot.inverse() * f);
    }

    // base, semi-implicit
    state_.base_linear_velocity += dt * force / mass;
    Vec3 wb = rot.inverse() * state_.base_angular_velocity;
    const Vec3 tau_body = rot.inverse() * torque;
    wb += dt * (tau_body - wb.cross(inertia_diag.cwiseProduct(wb))).cwiseQuotient(inertia_diag);
    state_.base_angular_velocity = rot * wb;
    state_.base_position += dt * state_.base_linear_velocity;
    state_.base_orientation = (rot * quat_exp(wb * dt)).normalized();

    // joints: fixed inertia, hard stops at the limits
    for (int j = 0; j < kNumJoints; ++j) {
      state_.joint_velocities[j] += dt * tau[j] / cfg_.joint_inertia;
      state_.joint_velocities[j] = std::clamp(state_.joint_velocities[j],
                                              -cfg_.joint_velocity_limit,
                                              cfg_.joint_velocity_limit);
      state_.joint_angles[j] += dt * state_.joint_velocities[j];
      const JointLimit& lim = cfg_.morphology.joint_limits[j];
      if (state_.joint_angles[j] < lim.lo) {
        state_.joint_angles[j] = lim.lo;
        state_.joint_velocities[j] = std::max(state_.joint_velocities[j], 0.0);
      } else if (state_.joint_angles[j] > lim.hi) {
        state_.joint_angles[j] = lim.hi;
        state_.joint_velocities[j] = std::min(state_.joint_velocities[j], 0.0);
      }
    }
  }

  state_.last_action = action;
  ++steps_;
  refresh_toes();

  for (int i = 0; i + 1 < kProprioHistory; ++i) history_[i] = history_[i + 1];
  history_[kProprioHistory - 1] = proprio_frame_from_state(state_);
  refresh_observation();

  termination_ = check_termination(state_, terrain_, cfg_, steps_);
  return termination_;
}

RobotState SimEnv::standing_state(const SimConfig& cfg, const TerrainField& field, double x,
                                  double y, double yaw) {
  RobotState s;
  const double ground = field.height_at(x, y);
  s.base_position = Vec3(x, y, ground + cfg.standing_height);
  s.base_orientation = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 target =
        cfg.morphology.hip_positions[leg] +
        Vec3(0.0, leg_side(leg) * cfg.morphology.hip_offset, -cfg.standing_height);
    const LegIkResult ik = leg_ik(target, leg, cfg.morphology);
    s.joint_angles.segment<3>(3 * leg) = ik.angles;
  }
  s.last_action = s.joint_angles;
  s.toe_positions =
      forward_kinematics(s.base_position, s.base_orientation, s.joint_angles, cfg.morphology);
  return s;
}

RobotState SimEnv::state_from_reference(const ReferencePose& ref,
                                        const RobotMorphology& morph) {
  RobotState s;
  s.base_position = ref.base_position;
  s.base_orientation = ref.base_orientation;
  s.base_linear_velocity = ref.base_linear_velocity;
  s.base_angular_velocity = ref.base_angular_velocity;
  s.joint_angles = ref.joint_angles;
  s.joint_velocities = ref.joint_velocities;
  s.last_action = ref.joint_angles;
  s.toe_positions = forward_kinematics(ref.base_position, ref.base_orientation,
                                       ref.joint_angles, morph);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 q_leg = ref.joint_angles.segment<3>(3 * leg);
    const Vec3 qd_leg = ref.joint_velocities.segment<3>(3 * leg);
    const Vec3 offset = ref.base_orientation * leg_forward_kinematics(q_leg, leg, morph);
    s.toe_velocities[leg] = ref.base_linear_velocity +
                            ref.base_angular_velocity.cross(offset) +
                            ref.base_orientation * (leg_jacobian(q_leg, leg, morph) * qd_leg);
  }
  return s;
}

}  // namespace quadmimic
