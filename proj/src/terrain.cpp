#include "quadmimic/terrain.hpp"

#include "quadmimic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace quadmimic {

const char* to_string(TerrainKind k) {
  switch (k) {
    case TerrainKind::Plane: return "plane";
    case TerrainKind::SlopeUp: return "slopeup";
    case TerrainKind::SlopeDown: return "slopedown";
    case TerrainKind::StairUp: return "stairup";
    case TerrainKind::StairDown: return "stairdown";
    case TerrainKind::Blocks: return "blocks";
    case TerrainKind::Hills: return "hills";
  }
  return "plane";
}

TerrainKind terrain_kind_from_string(const std::string& s) {
  for (TerrainKind k : kAllTerrainKinds) {
    if (s == to_string(k)) return k;
  }
  throw ParseError("unknown terrain kind '" + s + "'");
}

void TerrainParams::validate(TerrainKind kind) const {
  switch (kind) {
    case TerrainKind::Plane:
      break;
    case TerrainKind::SlopeUp:
    case TerrainKind::SlopeDown:
      if (!(slope_inclination >= 0.0) || slope_inclination >= M_PI / 2) {
        throw ValidationError("terrain: slope inclination must lie in [0, pi/2)");
      }
      break;
    case TerrainKind::StairUp:
    case TerrainKind::StairDown:
      if (!(stair_step_depth > 0.0)) {
        throw ValidationError("terrain: stair step depth must be positive");
      }
      if (!(stair_step_height >= 0.0)) {
        throw ValidationError("terrain: stair step height must be non-negative");
      }
      if (stair_step_count < 1) {
        throw ValidationError("terrain: stair step count must be at least 1");
      }
      break;
    case TerrainKind::Blocks:
      if (!(block_size > 0.0)) throw ValidationError("terrain: block size must be positive");
      if (!(block_max_height >= 0.0)) {
        throw ValidationError("terrain: block height must be non-negative");
      }
      break;
    case TerrainKind::Hills:
      if (!(hill_height >= 0.0)) {
        throw ValidationError("terrain: hill height must be non-negative");
      }
      break;
  }
}

namespace {
constexpr double kEdgeHalfWidth = 5.0;  // stair edges span y in [-5, 5]
constexpr int kHillWaves = 8;
constexpr double kHillScanHalf = 8.0;   // normalization scan window, m
constexpr double kHillScanStep = 0.04;
}  // namespace

TerrainField::TerrainField() : TerrainField(TerrainKind::Plane, TerrainParams{}, 0) {}

TerrainField::TerrainField(TerrainKind kind, const TerrainParams& params, uint64_t seed)
    : kind_(kind), params_(params), seed_(seed) {
  params_.validate(kind_);

  if (kind_ == TerrainKind::StairUp || kind_ == TerrainKind::StairDown) {
    edges_.reserve(params_.stair_step_count);
    for (int k = 0; k < params_.stair_step_count; ++k) {
      edges_.push_back({k * params_.stair_step_depth, kEdgeHalfWidth});
    }
  }

  if (kind_ == TerrainKind::Hills) {
    Rng rng(hash_combine(seed_, 0x48494C4Cull));
    waves_.reserve(kHillWaves);
    for (int i = 0; i < kHillWaves; ++i) {
      HillWave w;
      const double wavelength = rng.uniform(2.0, 6.0);
      const double dir = rng.uniform(0.0, 2.0 * M_PI);
      const double k = 2.0 * M_PI / wavelength;
      w.kx = k * std::cos(dir);
      w.ky = k * std::sin(dir);
      w.amp = rng.uniform(0.5, 1.0);
      w.phase = rng.uniform(0.0, 2.0 * M_PI);
      waves_.push_back(w);
    }
    // Dense scan to pin the realized peak-to-trough to hill_height.
    double lo = std::numeric_limits<double>::max();
    double hi = std::numeric_limits<double>::lowest();
    for (double x = -kHillScanHalf; x <= kHillScanHalf; x += kHillScanStep) {
      for (double y = -kHillScanHalf; y <= kHillScanHalf; y += kHillScanStep) {
        double z = 0.0;
        for (const HillWave& w : waves_) z += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
        lo = std::min(lo, z);
        hi = std::max(hi, z);
      }
    }
    const double span = hi - lo;
    hill_scale_ = span > 1e-12 ? params_.hill_height / span : 0.0;
    hill_offset_ = -0.5 * (hi + lo) * hill_scale_;
  }
}

double TerrainField::height_at(double x, double y) const {
  switch (kind_) {
    case TerrainKind::Plane:
      return 0.0;
    case TerrainKind::SlopeUp:
      return std::tan(params_.slope_inclination) * std::max(x, 0.0);
    case TerrainKind::SlopeDown:
      return -std::tan(params_.slope_inclination) * std::max(x, 0.0);
    case TerrainKind::StairUp:
    case TerrainKind::StairDown: {
      const double steps = std::clamp(std::floor(x / params_.stair_step_depth) + 1.0, 0.0,
                                      static_cast<double>(params_.stair_step_count));
      const double h = params_.stair_step_height * steps;
      return kind_ == TerrainKind::StairUp ? h : -h;
    }
    case TerrainKind::Blocks: {
      const auto ix = static_cast<int64_t>(std::floor(x / params_.block_size));
      const auto iy = static_cast<int64_t>(std::floor(y / params_.block_size));
      uint64_t h = hash_combine(seed_, static_cast<uint64_t>(ix));
      h = hash_combine(h, static_cast<uint64_t>(iy));
      const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
      return u * params_.block_max_height;
    }
    case TerrainKind::Hills: {
      double z = 0.0;
      for (const HillWave& w : waves_) z += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
      return hill_scale_ * z + hill_offset_;
    }
  }
  return 0.0;
}

double TerrainField::nearest_stair_edge_distance(double x, double y) const {
  if (edges_.empty()) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (const StairEdge& e : edges_) {
    const double dx = x - e.x;
    const double dy = std::max(0.0, std::abs(y) - e.y_half_width);
    best = std::min(best, std::hypot(dx, dy));
  }
  return best;
}

ExteroPatch sample_patch(const TerrainField& field, const Vec3& base_position, double yaw,
                         double noise_std, Rng& rng) {
  ExteroPatch patch;
  const double cy = std::cos(yaw);
  const double sy = std::sin(yaw);
  for (int i = 0; i < kExteroRows; ++i) {
    // forward axis spans [-0.5, 0.5], lateral [-0.25, 0.25]
    const double u = -0.5 + static_cast<double>(i) / (kExteroRows - 1);
    for (int j = 0; j < kExteroCols; ++j) {
      const double v = -0.25 + 0.5 * static_cast<double>(j) / (kExteroCols - 1);
      const double wx = base_position.x() + cy * u - sy * v;
      const double wy = base_position.y() + sy * u + cy * v;
      double h = field.height_at(wx, wy) - base_position.z();
      if (noise_std > 0.0) h += noise_std * rng.normal();
      patch.heights[i * kExteroCols + j] = h;
    }
  }
  return patch;
}

PatchGate patch_std_gate(const ExteroPatch& patch) {
  const double mean = patch.heights.mean();
  const double var = (patch.heights.array() - mean).square().sum() / kExteroDim;
  PatchGate g;
  g.std = std::sqrt(var);
  g.alpha = g.std > kGateStdThreshold ? kGateAlpha : 0.0;
  return g;
}

const std::array<CurriculumParamSpec, kNumCurriculumParams>& curriculum_table() {
  static const std::array<CurriculumParamSpec, kNumCurriculumParams> table = {{
      {0.1, 0.4, 0.02},     // slope inclination, rad
      {0.0, 0.15, 0.01},    // stair height, m
      {0.4, 0.34, -0.005},  // stair depth, m
      {0.05, 0.15, 0.03},   // block size, m
      {0.02, 0.1, 0.01},    // block height, m
      {0.05, 0.2, 0.02},    // hill height, m
  }};
  return table;
}

double CurriculumState::value(int param) const {
  const CurriculumParamSpec& s = curriculum_table()[param];
  const double raw = s.start + level[param] * s.step;
  return s.step >= 0 ? std::min(raw, s.end) : std::max(raw, s.end);
}

bool CurriculumState::at_max(int param) const {
  const CurriculumParamSpec& s = curriculum_table()[param];
  const double raw = s.start + level[param] * s.step;
  return s.step >= 0 ? raw >= s.end : raw <= s.end;
}

CurriculumState curriculum_step(const CurriculumState& state, bool success,
                                int streak_required) {
  if (streak_required < 1) throw ValidationError("curriculum: streak_required must be >= 1");
  CurriculumState next = state;
  if (!success) {
    next.success_streak = 0;
    return next;
  }
  next.success_streak = state.success_streak + 1;
  if (next.success_streak >= streak_required) {
    next.success_streak = 0;
    for (int p = 0; p < kNumCurriculumParams; ++p) {
      if (!next.at_max(p)) ++next.level[p];
    }
  }
  return next;
}

int stair_count_for_height(double stair_height) {
  const CurriculumParamSpec& s = curriculum_table()[kCurStairHeight];
  const double progress = std::clamp((stair_height - s.start) / (s.end - s.start), 0.0, 1.0);
  return 3 + static_cast<int>(std::lround(7.0 * progress));
}

TerrainParams CurriculumState::params_for_episode(TerrainKind kind, Rng& rng) const {
  auto draw = [&](int param) {
    const CurriculumParamSpec& s = curriculum_table()[param];
    if (at_max(param)) {
      const double lo = std::min(s.start, s.end);
      const double hi = std::max(s.start, s.end);
      return rng.uniform(lo, hi);
    }
    return value(param);
  };

  TerrainParams p;
  switch (kind) {
    case TerrainKind::Plane:
      break;
    case TerrainKind::SlopeUp:
    case TerrainKind::SlopeDown:
      p.slope_inclination = draw(kCurSlope);
      break;
    case TerrainKind::StairUp:
    case TerrainKind::StairDown:
      p.stair_step_height = draw(kCurStairHeight);
      p.stair_step_depth = draw(kCurStairDepth);
      p.stair_step_count = stair_count_for_height(p.stair_step_height);
      break;
    case TerrainKind::Blocks:
      p.block_size = draw(kCurBlockSize);
      p.block_max_height = draw(kCurBlockHeight);
      break;
    case TerrainKind::Hills:
      p.hill_height = draw(kCurHillHeight);
      break;
  }
  return p;
}

void export_heightmap(const TerrainField& field, std::ostream& out, double x0, double y0,
                      int rows, int cols, double cell_size) {
  if (rows < 1 || cols < 1 || cell_size <= 0) {
    throw ValidationError("heightmap export: bad grid");
  }
  out << rows << ' ' << cols << ' ' << cell_size << "\n";
  out.precision(17);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (j) out << ' ';
      out << field.height_at(x0 + i * cell_size, y0 + j * cell_size);
    }
    out << "\n";
  }
}

}  // namespace quadmimic
