#pragma once

#include "quadmimic/mocap.hpp"
#include "quadmimic/terrain.hpp"
#include "quadmimic/trajectory.hpp"
#include "quadmimic/types.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

namespace quadmimic {

struct ContactInterval {
  double touchdown;
  double liftoff;
};

struct ContactSequence {
  std::array<std::vector<ContactInterval>, kNumLegs> intervals;
  double dt = 0.0;        // detection tick
  double span_end = 0.0;  // timeline length in seconds
};

// Contiguous runs of per-toe contact flags; runs shorter than min_ticks are
// dropped as blips. A run still active at the end closes at span_end.
ContactSequence detect_contacts(const std::vector<std::array<bool, kNumLegs>>& flags,
                                double dt, int min_ticks = 2);

std::vector<std::array<bool, kNumLegs>> contact_flags_from_trajectory(
    const std::vector<TrajectoryRecord>& traj);
// Kinematic flags: end effector within tol of the clip's terrain profile.
std::vector<std::array<bool, kNumLegs>> contact_flags_from_clip(const MotionClip& clip,
                                                                double tol = 1e-3);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  int count = 0;
};
MeanStd mean_std(const std::vector<double>& samples);

struct GaitMetrics {
  MeanStd cycle_time;   // touchdown to touchdown
  MeanStd swing_time;   // liftoff to next touchdown
  MeanStd stance_time;  // touchdown to liftoff
  MeanStd step_length;  // fore/hind pair touchdown separation along travel
};

// Pools cycles across all four toes. toe_positions[k][leg] must align with
// the flag timeline the contacts came from. Throws MetricError when any toe
// shows fewer than two full cycles or there is no net travel direction.
GaitMetrics gait_parameters(const ContactSequence& contacts,
                            const std::vector<std::array<Vec3, kNumLegs>>& toe_positions);

std::vector<std::array<Vec3, kNumLegs>> toe_positions_from_trajectory(
    const std::vector<TrajectoryRecord>& traj);
std::vector<std::array<Vec3, kNumLegs>> toe_positions_from_clip(const MotionClip& clip);

void write_gait_csv(const GaitMetrics& m, std::ostream& out);

// Policy evaluation over terrains.
struct EpisodeOutcome {
  double total_return = 0.0;       // includes the stair edge penalty
  double return_no_penalty = 0.0;  // command reward only
  int steps = 0;
};
using EpisodeRunner = std::function<EpisodeOutcome(TerrainKind, uint64_t seed)>;

struct ReturnCell {
  MeanStd with_penalty;
  MeanStd no_penalty;
};

struct ReturnTable {
  std::vector<TerrainKind> kinds;
  std::vector<ReturnCell> cells;
  int episodes_per_kind = 0;
};

// Runs episodes_per_kind seeded episodes per terrain kind. Throws
// ValidationError for an empty kind list or non-positive episode count.
ReturnTable evaluate_return(const EpisodeRunner& runner,
                            const std::vector<TerrainKind>& kinds, int episodes_per_kind,
                            uint64_t seed);

// Row per method variant, column per terrain, cells "mean+-std".
void write_return_csv(const ReturnTable& table, const std::string& method,
                      std::ostream& out);

}  // namespace quadmimic
