#include "quadmimic/gaitmetrics.hpp"

#include "quadmimic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace quadmimic {

ContactSequence detect_contacts(const std::vector<std::array<bool, kNumLegs>>& flags,
                                double dt, int min_ticks) {
  if (dt <= 0.0) throw ValidationError("detect_contacts: dt must be positive");
  if (min_ticks < 1) throw ValidationError("detect_contacts: min_ticks must be >= 1");
  ContactSequence seq;
  seq.dt = dt;
  seq.span_end = flags.size() * dt;
  const int n = static_cast<int>(flags.size());
  for (int leg = 0; leg < kNumLegs; ++leg) {
    int run_start = -1;
    for (int k = 0; k <= n; ++k) {
      const bool on = k < n && flags[k][leg];
      if (on && run_start < 0) run_start = k;
      if (!on && run_start >= 0) {
        if (k - run_start >= min_ticks) {
          seq.intervals[leg].push_back({run_start * dt, k * dt});
        }
        run_start = -1;
      }
    }
  }
  return seq;
}

std::vector<std::array<bool, kNumLegs>> contact_flags_from_trajectory(
    const std::vector<TrajectoryRecord>& traj) {
  std::vector<std::array<bool, kNumLegs>> flags;
  flags.reserve(traj.size());
  for (const TrajectoryRecord& r : traj) flags.push_back(r.toe_contacts);
  return flags;
}

std::vector<std::array<bool, kNumLegs>> contact_flags_from_clip(const MotionClip& clip,
                                                                double tol) {
  std::vector<std::array<bool, kNumLegs>> flags;
  flags.reserve(clip.frames.size());
  for (const ReferencePose& f : clip.frames) {
    std::array<bool, kNumLegs> row{};
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Vec3& p = f.end_effector_positions[leg];
      row[leg] = p.z() - clip_terrain_height(clip.terrain_tag, p.x()) <= tol;
    }
    flags.push_back(row);
  }
  return flags;
}

MeanStd mean_std(const std::vector<double>& samples) {
  MeanStd out;
  out.count = static_cast<int>(samples.size());
  if (samples.empty()) return out;
  double sum = 0.0;
  for (double s : samples) sum += s;
  out.mean = sum / out.count;
  double var = 0.0;
  for (double s : samples) var += (s - out.mean) * (s - out.mean);
  out.std = std::sqrt(var / out.count);
  return out;
}

std::vector<std::array<Vec3, kNumLegs>> toe_positions_from_trajectory(
    const std::vector<TrajectoryRecord>& traj) {
  std::vector<std::array<Vec3, kNumLegs>> out;
  out.reserve(traj.size());
  for (const TrajectoryRecord& r : traj) out.push_back(r.toe_positions);
  return out;
}

std::vector<std::array<Vec3, kNumLegs>> toe_positions_from_clip(const MotionClip& clip) {
  std::vector<std::array<Vec3, kNumLegs>> out;
  out.reserve(clip.frames.size());
  for (const ReferencePose& f : clip.frames) out.push_back(f.end_effector_positions);
  return out;
}

GaitMetrics gait_parameters(const ContactSequence& contacts,
                            const std::vector<std::array<Vec3, kNumLegs>>& toe_positions) {
  std::vector<double> cycles, swings, stances, steps;

  // A stance already active at time zero has an unknown true touchdown, so
  // the leading interval is dropped before any touchdown-based statistic.
  std::array<std::vector<ContactInterval>, kNumLegs> trimmed;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    trimmed[leg] = contacts.intervals[leg];
    if (!trimmed[leg].empty() && trimmed[leg].front().touchdown <= 0.0) {
      trimmed[leg].erase(trimmed[leg].begin());
    }
  }

  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto& iv = trimmed[leg];
    if (iv.size() < 3) {
      throw MetricError("gait: toe " + std::to_string(leg) + " shows " +
                        std::to_string(iv.size() < 1 ? 0 : iv.size() - 1) +
                        " full cycles, need at least 2");
    }
    for (size_t k = 0; k + 1 < iv.size(); ++k) {
      cycles.push_back(iv[k + 1].touchdown - iv[k].touchdown);
      swings.push_back(iv[k + 1].touchdown - iv[k].liftoff);
      stances.push_back(iv[k].liftoff - iv[k].touchdown);
    }
  }

  // Travel direction from net toe displacement over the timeline.
  if (toe_positions.empty()) throw MetricError("gait: no toe positions");
  Vec2 travel = Vec2::Zero();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    travel += (toe_positions.back()[leg] - toe_positions.front()[leg]).head<2>();
  }
  if (travel.norm() < 1e-9) throw MetricError("gait: no net travel direction");
  travel.normalize();

  auto toe_at = [&](int leg, double t) {
    size_t k = static_cast<size_t>(std::lround(t / contacts.dt));
    k = std::min(k, toe_positions.size() - 1);
    return toe_positions[k][leg];
  };

  // Step length: touchdown of one limb to the next touchdown of its lateral
  // partner, projected onto the travel direction.
  const std::array<std::pair<int, int>, 2> pairs = {{{kForeLeft, kForeRight},
                                                     {kHindLeft, kHindRight}}};
  for (const auto& [a, b] : pairs) {
    for (int from : {a, b}) {
      const int to = from == a ? b : a;
      for (const ContactInterval& iv : trimmed[from]) {
        const auto& partner = trimmed[to];
        auto it = std::find_if(partner.begin(), partner.end(), [&](const ContactInterval& p) {
          return p.touchdown > iv.touchdown;
        });
        if (it == partner.end()) continue;
        const Vec3 p0 = toe_at(from, iv.touchdown);
        const Vec3 p1 = toe_at(to, it->touchdown);
        steps.push_back(travel.dot((p1 - p0).head<2>()));
      }
    }
  }
  if (steps.empty()) throw MetricError("gait: no fore/hind step pairs found");

  GaitMetrics m;
  m.cycle_time = mean_std(cycles);
  m.swing_time = mean_std(swings);
  m.stance_time = mean_std(stances);
  m.step_length = mean_std(steps);
  return m;
}

void write_gait_csv(const GaitMetrics& m, std::ostream& out) {
  out << "metric,mean,std,count\n";
  auto row = [&](const char* name, const MeanStd& v) {
    std::ostringstream ss;
    ss.precision(10);
    ss << name << ',' << v.mean << ',' << v.std << ',' << v.count << '\n';
    out << ss.str();
  };
  row("cycle_time", m.cycle_time);
  row("swing_time", m.swing_time);
  row("stance_time", m.stance_time);
  row("step_length", m.step_length);
}

ReturnTable evaluate_return(const EpisodeRunner& runner,
                            const std::vector<TerrainKind>& kinds, int episodes_per_kind,
                            uint64_t seed) {
  if (kinds.empty()) throw ValidationError("evaluate_return: no terrain kinds");
  if (episodes_per_kind < 1) {
    throw ValidationError("evaluate_return: need at least one episode per kind");
  }
  ReturnTable table;
  table.kinds = kinds;
  table.episodes_per_kind = episodes_per_kind;
  for (size_t ki = 0; ki < kinds.size(); ++ki) {
    std::vector<double> with, without;
    for (int e = 0; e < episodes_per_kind; ++e) {
      const uint64_t ep_seed = hash_combine(hash_combine(seed, ki), static_cast<uint64_t>(e));
      const EpisodeOutcome out = runner(kinds[ki], ep_seed);
      with.push_back(out.total_return);
      without.push_back(out.return_no_penalty);
    }
    table.cells.push_back({mean_std(with), mean_std(without)});
  }
  return table;
}

void write_return_csv(const ReturnTable& table, const std::string& method,
                      std::ostream& out) {
  std::ostringstream ss;
  ss.precision(10);
  ss << "method";
  for (TerrainKind k : table.kinds) ss << ',' << to_string(k);
  ss << '\n';
  ss << method;
  for (const ReturnCell& c : table.cells) {
    ss << ',' << c.with_penalty.mean << "+-" << c.with_penalty.std;
  }
  ss << '\n';
  ss << method << "-nopenalty";
  for (const ReturnCell& c : table.cells) {
    ss << ',' << c.no_penalty.mean << "+-" << c.no_penalty.std;
  }
  ss << '\n';
  out << ss.str();
}

}  // namespace quadmimic
