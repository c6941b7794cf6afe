#pragma once

#include "quadmimic/kinematics.hpp"
#include "quadmimic/mocap.hpp"
#include "quadmimic/rng.hpp"
#include "quadmimic/robot_state.hpp"
#include "quadmimic/terrain.hpp"
#include "quadmimic/types.hpp"

#include <array>
#include <optional>

namespace quadmimic {

// Per-episode randomization.
struct DomainParams {
  double friction = 0.85;
  double torque_limit = 20.0;
  double base_mass_scale = 1.0;
  double perception_noise_std = 0.0;
  Vec3 com_offset = Vec3::Zero();

  static DomainParams sample(Rng& rng);
  static DomainParams nominal();
};

inline constexpr double kPerceptionNoiseStd = 0.01;

struct SimConfig {
  RobotMorphology morphology = RobotMorphology::defaults();
  double policy_dt = kPolicyDt;
  int substeps = kSubsteps;
  double kp = 55.0;
  double kd = 0.8;
  double base_mass = 12.0;
  Vec3 base_box = Vec3(0.6, 0.3, 0.15);  // collision box centered on the base
  double joint_inertia = 0.02;           // kg m^2, per joint, massless-leg model
  double contact_normal_stiffness = 3.0e4;
  // kept under m_eff/dt for the reflected joint inertia: an explicit damper
  // above that bound reverses the contact velocity each substep and chatters
  double contact_normal_damping = 150.0;
  double contact_tangent_stiffness = 6.0e3;
  double contact_tangent_damping = 60.0;
  double joint_velocity_limit = 25.0;  // rad/s, integrator safety clamp
  double standing_height = 0.38;
  double roll_limit = 45.0 * M_PI / 180.0;
  double pitch_limit = 60.0 * M_PI / 180.0;
  int max_episode_steps = 360;  // 7.2 s at 50 Hz
  double toe_contact_tolerance = 1e-3;
  double toe_separation_speed = 1e-2;
  bool randomize_domain = true;

  double physics_dt() const { return policy_dt / substeps; }
};

enum class TerminationReason { None, RollLimit, PitchLimit, BodyContact, TimeLimit };
const char* to_string(TerminationReason r);

struct Observation {
  VecX proprio = VecX::Zero(kProprioDim);
  ExteroPatch extero;
};

// PD torque for one joint, clamped to the limit.
double pd_torque(double target, double q, double qd, double kp, double kd, double limit,
                 bool* clamped = nullptr);

// Points that must stay above ground: 8 base-box corners and the 4 knees.
std::array<Vec3, 12> body_sample_points(const RobotState& s, const SimConfig& cfg);

// Checked in order: roll, pitch, body contact, time limit.
TerminationReason check_termination(const RobotState& s, const TerrainField& field,
                                    const SimConfig& cfg, int steps_taken);

// Centroidal rigid-body simulator: the base is a single rigid box, legs are
// massless kinematic chains with fixed per-joint inertia, ground contact is a
// penalty spring-damper with an anchored tangential spring and Coulomb cone,
// integrated semi-implicitly at 500 Hz.
class SimEnv {
 public:
  explicit SimEnv(SimConfig cfg = {});

  // Starts an episode. Throws ValidationError if a non-toe body point starts
  // below the terrain.
  void reset(const TerrainField& terrain, uint64_t seed, const RobotState& init);

  // One 50 Hz policy tick; action is the PD joint-angle target. Throws
  // StateError when called before reset or after termination.
  TerminationReason step(const Vec12& action);

  const SimConfig& config() const { return cfg_; }
  const RobotState& state() const { return state_; }
  const DomainParams& domain() const { return domain_; }
  const TerrainField& terrain() const { return terrain_; }
  const Observation& observation() const { return obs_; }
  TerminationReason termination() const { return termination_; }
  int steps_taken() const { return steps_; }
  double time() const { return steps_ * cfg_.policy_dt; }
  const Vec12& applied_torque() const { return applied_torque_; }
  const std::array<bool, kNumJoints>& torque_clamped() const { return torque_clamped_; }

  // Standing pose with feet on the terrain under the hips.
  static RobotState standing_state(const SimConfig& cfg, const TerrainField& field,
                                   double x, double y, double yaw);
  static RobotState state_from_reference(const ReferencePose& ref,
                                         const RobotMorphology& morph);

 private:
  void refresh_toes();
  void refresh_observation();

  SimConfig cfg_;
  TerrainField terrain_;
  DomainParams domain_;
  Rng rng_{0};
  RobotState state_;
  Observation obs_;
  std::array<ProprioFrame, kProprioHistory> history_;
  std::array<std::optional<Vec2>, kNumLegs> contact_anchor_;
  std::array<double, kNumLegs> contact_normal_force_{};
  Vec12 applied_torque_ = Vec12::Zero();
  std::array<bool, kNumJoints> torque_clamped_{};
  TerminationReason termination_ = TerminationReason::None;
  int steps_ = 0;
  bool live_ = false;
};

}  // namespace quadmimic
