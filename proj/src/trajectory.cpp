#include "quadmimic/trajectory.hpp"

#include "quadmimic/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace quadmimic {

namespace {

using json = nlohmann::ordered_json;

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("trajectory: bad vec3");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

void write_trajectory(const std::vector<TrajectoryRecord>& records, std::ostream& out) {
  for (const TrajectoryRecord& r : records) {
    json j;
    j["step"] = r.step;
    j["time"] = r.time;
    j["base_pos"] = vec_to_json(r.base_position);
    j["base_quat"] = json::array({r.base_orientation.w(), r.base_orientation.x(),
                                  r.base_orientation.y(), r.base_orientation.z()});
    j["base_lin_vel"] = vec_to_json(r.base_linear_velocity);
    j["base_ang_vel"] = vec_to_json(r.base_angular_velocity);
    j["q"] = std::vector<double>(r.joint_angles.data(), r.joint_angles.data() + kNumJoints);
    json toes = json::array();
    for (int leg = 0; leg < kNumLegs; ++leg) toes.push_back(vec_to_json(r.toe_positions[leg]));
    j["toe_pos"] = toes;
    j["toe_contact"] = json::array({r.toe_contacts[0], r.toe_contacts[1], r.toe_contacts[2],
                                    r.toe_contacts[3]});
    j["tau"] =
        std::vector<double>(r.applied_torque.data(), r.applied_torque.data() + kNumJoints);
    j["reward"] = r.reward;
    j["termination"] = r.termination;
    out << j.dump() << "\n";
  }
}

void save_trajectory(const std::vector<TrajectoryRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trajectory '" + path + "'");
  write_trajectory(records, out);
}

std::vector<TrajectoryRecord> parse_trajectory(std::istream& in, const std::string& name) {
  std::vector<TrajectoryRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(name + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      TrajectoryRecord r;
      r.step = j.at("step").get<int>();
      r.time = j.at("time").get<double>();
      r.base_position = vec_from_json(j.at("base_pos"));
      const auto& q = j.at("base_quat");
      r.base_orientation = Quat(q.at(0).get<double>(), q.at(1).get<double>(),
                                q.at(2).get<double>(), q.at(3).get<double>());
      r.base_linear_velocity = vec_from_json(j.at("base_lin_vel"));
      r.base_angular_velocity = vec_from_json(j.at("base_ang_vel"));
      const auto angles = j.at("q").get<std::vector<double>>();
      const auto tau = j.at("tau").get<std::vector<double>>();
      if (angles.size() != kNumJoints || tau.size() != kNumJoints) {
        throw ParseError("wrong joint count");
      }
      for (int k = 0; k < kNumJoints; ++k) {
        r.joint_angles[k] = angles[k];
        r.applied_torque[k] = tau[k];
      }
      const auto& toes = j.at("toe_pos");
      const auto& flags = j.at("toe_contact");
      if (toes.size() != kNumLegs || flags.size() != kNumLegs) {
        throw ParseError("wrong leg count");
      }
      for (int leg = 0; leg < kNumLegs; ++leg) {
        r.toe_positions[leg] = vec_from_json(toes.at(leg));
        r.toe_contacts[leg] = flags.at(leg).get<bool>();
      }
      r.reward = j.at("reward").get<double>();
      r.termination = j.at("termination").get<std::string>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(name + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TrajectoryRecord> load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory '" + path + "'");
  return parse_trajectory(in, path);
}

}  // namespace quadmimic
