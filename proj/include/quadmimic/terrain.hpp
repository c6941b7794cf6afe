#pragma once

#include "quadmimic/rng.hpp"
#include "quadmimic/types.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace quadmimic {

enum class TerrainKind { Plane, SlopeUp, SlopeDown, StairUp, StairDown, Blocks, Hills };
inline constexpr int kNumTerrainKinds = 7;
inline constexpr std::array<TerrainKind, kNumTerrainKinds> kAllTerrainKinds = {
    TerrainKind::Plane,   TerrainKind::SlopeUp,   TerrainKind::SlopeDown,
    TerrainKind::StairUp, TerrainKind::StairDown, TerrainKind::Blocks,
    TerrainKind::Hills};

const char* to_string(TerrainKind k);
TerrainKind terrain_kind_from_string(const std::string& s);

struct TerrainParams {
  double slope_inclination = 0.26;  // rad, magnitude; sign comes from the kind
  double stair_step_height = 0.16;  // m
  double stair_step_depth = 0.32;   // m
  int stair_step_count = 3;
  double block_size = 0.1;        // m, square cell edge
  double block_max_height = 0.05; // m
  double hill_height = 0.1;       // m, peak-to-trough

  // Throws ValidationError when a field relevant to the kind is unusable.
  void validate(TerrainKind kind) const;
};

// Stair edge: the convex tread lip, a segment at constant x spanning y.
struct StairEdge {
  double x;
  double y_half_width;
};

// Analytic height field. Slopes and stairs start at x = 0 with flat ground
// behind; blocks and hills cover the whole plane. Deterministic in
// (kind, params, seed).
class TerrainField {
 public:
  TerrainField();  // flat plane
  TerrainField(TerrainKind kind, const TerrainParams& params, uint64_t seed);

  TerrainKind kind() const { return kind_; }
  const TerrainParams& params() const { return params_; }
  uint64_t seed() const { return seed_; }

  double height_at(double x, double y) const;

  // Stair tread edges; empty for non-stair kinds.
  const std::vector<StairEdge>& stair_edges() const { return edges_; }

  // Horizontal distance from (x, y) to the nearest stair edge segment;
  // +infinity away from stairs.
  double nearest_stair_edge_distance(double x, double y) const;

 private:
  TerrainKind kind_ = TerrainKind::Plane;
  TerrainParams params_;
  uint64_t seed_ = 0;
  std::vector<StairEdge> edges_;

  // hills: sum of seeded sinusoids, rescaled at construction so the
  // peak-to-trough over the scanned neighborhood equals hill_height
  struct HillWave {
    double amp, kx, ky, phase;
  };
  std::vector<HillWave> waves_;
  double hill_scale_ = 0.0;
  double hill_offset_ = 0.0;
};

// Robot-centric exteroceptive patch: 64 x 16 grid over 1.0 m x 0.5 m,
// row-major, heights relative to the base height.
struct ExteroPatch {
  VecX heights = VecX::Zero(kExteroDim);
};

ExteroPatch sample_patch(const TerrainField& field, const Vec3& base_position, double yaw,
                         double noise_std, Rng& rng);

// Gate weight for the adaptation offset: alpha = 0.1 when the patch height
// standard deviation exceeds 0.01 m, else 0.
struct PatchGate {
  double std;
  double alpha;
};
PatchGate patch_std_gate(const ExteroPatch& patch);
inline constexpr double kGateStdThreshold = 0.01;
inline constexpr double kGateAlpha = 0.1;

// Difficulty schedule. Values are reconstructed from integer advancement
// counts so bounds are hit exactly.
enum CurriculumParamId {
  kCurSlope = 0,
  kCurStairHeight,
  kCurStairDepth,
  kCurBlockSize,
  kCurBlockHeight,
  kCurHillHeight,
  kNumCurriculumParams
};

struct CurriculumParamSpec {
  double start, end, step;
};

const std::array<CurriculumParamSpec, kNumCurriculumParams>& curriculum_table();

struct CurriculumState {
  std::array<int, kNumCurriculumParams> level{};  // advancement counts
  int success_streak = 0;

  double value(int param) const;
  bool at_max(int param) const;

  // Episode parameters for one terrain kind. Parameters at their bound are
  // sampled uniformly over their whole range; the stair step count grows
  // 3 -> 10 with stair-height progress.
  TerrainParams params_for_episode(TerrainKind kind, Rng& rng) const;
};

// Streak bookkeeping: `streak_required` consecutive successes advance every
// non-maxed parameter one step; any failure resets the streak.
CurriculumState curriculum_step(const CurriculumState& state, bool success,
                                int streak_required);

int stair_count_for_height(double stair_height);

// Text export: header "rows cols cell_size", then row-major heights sampled
// on a grid anchored at (x0, y0).
void export_heightmap(const TerrainField& field, std::ostream& out, double x0, double y0,
                      int rows, int cols, double cell_size);

}  // namespace quadmimic
