#include "quadmimic/config.hpp"

#include "quadmimic/checkpoint.hpp"
#include "quadmimic/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace quadmimic {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_line(const std::string& name, int line, const std::string& what) {
  throw ParseError(name + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in, const std::string& name) {
  ConfigFile out;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad_line(name, lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) bad_line(name, lineno, "empty section name");
      out.sections[section];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) bad_line(name, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) bad_line(name, lineno, "empty key");
    if (section.empty()) bad_line(name, lineno, "key before any [section]");
    out.sections[section][key] = value;
  }
  return out;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  return parse(in, path);
}

namespace {

double to_double(const std::string& section, const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return d;
  } catch (const std::exception&) {
    throw ValidationError("config [" + section + "] " + key + ": not a number: " + v);
  }
}

int to_int(const std::string& section, const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return static_cast<int>(d);
  } catch (const std::exception&) {
    throw ValidationError("config [" + section + "] " + key + ": not an integer: " + v);
  }
}

uint64_t to_u64(const std::string& section, const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return d;
  } catch (const std::exception&) {
    throw ValidationError("config [" + section + "] " + key + ": not an unsigned integer: " + v);
  }
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("config [" + section + "] " + key + ": not a bool: " + v);
}

std::vector<int> to_int_list(const std::string& section, const std::string& key,
                             const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(to_int(section, key, item));
  }
  if (out.empty()) throw ValidationError("config [" + section + "] " + key + ": empty list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& section,
                                  const std::string& key, const std::string& value)>;

struct KeyDef {
  const char* section;
  const char* key;
  Setter set;
  std::string (*describe)(const RunConfig&);
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(12);
  ss << v;
  return ss.str();
}

std::string fmt_list(const std::vector<int>& v) {
  std::ostringstream ss;
  for (size_t i = 0; i < v.size(); ++i) ss << (i ? "," : "") << v[i];
  return ss.str();
}

#define NUM_KEY(sec, field, key)                                                     \
  {#sec, key,                                                                        \
   [](RunConfig& c, const std::string& s, const std::string& k, const std::string& v) { \
     c.field = to_double(s, k, v);                                                   \
   },                                                                                \
   [](const RunConfig& c) { return fmt(c.field); }}
#define INT_KEY(sec, field, key)                                                     \
  {#sec, key,                                                                        \
   [](RunConfig& c, const std::string& s, const std::string& k, const std::string& v) { \
     c.field = to_int(s, k, v);                                                      \
   },                                                                                \
   [](const RunConfig& c) { return std::to_string(c.field); }}
#define U64_KEY(sec, field, key)                                                     \
  {#sec, key,                                                                        \
   [](RunConfig& c, const std::string& s, const std::string& k, const std::string& v) { \
     c.field = to_u64(s, k, v);                                                      \
   },                                                                                \
   [](const RunConfig& c) { return std::to_string(c.field); }}
#define BOOL_KEY(sec, field, key)                                                    \
  {#sec, key,                                                                        \
   [](RunConfig& c, const std::string& s, const std::string& k, const std::string& v) { \
     c.field = to_bool(s, k, v);                                                     \
   },                                                                                \
   [](const RunConfig& c) { return c.field ? std::string("true") : std::string("false"); }}
#define LIST_KEY(sec, field, key)                                                    \
  {#sec, key,                                                                        \
   [](RunConfig& c, const std::string& s, const std::string& k, const std::string& v) { \
     c.field = to_int_list(s, k, v);                                                 \
   },                                                                                \
   [](const RunConfig& c) { return fmt_list(c.field); }}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      INT_KEY(trainer, trainer.num_envs, "num_envs"),
      INT_KEY(trainer, trainer.horizon, "horizon"),
      INT_KEY(trainer, trainer.epochs, "epochs"),
      INT_KEY(trainer, trainer.minibatch_size, "minibatch_size"),
      NUM_KEY(trainer, trainer.discount, "discount"),
      NUM_KEY(trainer, trainer.gae_lambda, "gae_lambda"),
      NUM_KEY(trainer, trainer.clip_epsilon, "clip_epsilon"),
      NUM_KEY(trainer, trainer.learning_rate, "learning_rate"),
      NUM_KEY(trainer, trainer.value_coeff, "value_coeff"),
      NUM_KEY(trainer, trainer.entropy_coeff, "entropy_coeff"),
      NUM_KEY(trainer, trainer.kl_beta, "kl_beta"),
      NUM_KEY(trainer, trainer.max_grad_norm, "max_grad_norm"),
      INT_KEY(trainer, trainer.updates, "updates"),
      BOOL_KEY(trainer, trainer.normalize_advantages, "normalize_advantages"),
      U64_KEY(trainer, trainer.seed, "seed"),
      NUM_KEY(trainer, trainer.command_speed_min, "command_speed_min"),
      NUM_KEY(trainer, trainer.command_speed_max, "command_speed_max"),
      NUM_KEY(trainer, trainer.heading_error_range, "heading_error_range"),
      INT_KEY(trainer, trainer.curriculum_streak, "curriculum_streak"),
      NUM_KEY(trainer, trainer.success_threshold, "success_threshold"),
      NUM_KEY(trainer, trainer.stair_penalty_weight, "stair_penalty_weight"),
      LIST_KEY(policy, policy.encoder_hidden, "encoder_hidden"),
      LIST_KEY(policy, policy.controller_hidden, "controller_hidden"),
      LIST_KEY(policy, policy.value_hidden, "value_hidden"),
      INT_KEY(policy, policy.extero_embed, "extero_embed"),
      NUM_KEY(sim, sim.kp, "kp"),
      NUM_KEY(sim, sim.kd, "kd"),
      NUM_KEY(sim, sim.base_mass, "base_mass"),
      NUM_KEY(sim, sim.joint_inertia, "joint_inertia"),
      NUM_KEY(sim, sim.contact_normal_stiffness, "contact_normal_stiffness"),
      NUM_KEY(sim, sim.contact_normal_damping, "contact_normal_damping"),
      NUM_KEY(sim, sim.contact_tangent_stiffness, "contact_tangent_stiffness"),
      NUM_KEY(sim, sim.contact_tangent_damping, "contact_tangent_damping"),
      NUM_KEY(sim, sim.standing_height, "standing_height"),
      INT_KEY(sim, sim.max_episode_steps, "max_episode_steps"),
      BOOL_KEY(sim, sim.randomize_domain, "randomize_domain"),
  };
  return table;
}

#undef NUM_KEY
#undef INT_KEY
#undef U64_KEY
#undef BOOL_KEY
#undef LIST_KEY

}  // namespace

void RunConfig::apply(const ConfigFile& file) {
  const auto& table = key_table();
  for (const auto& [section, keys] : file.sections) {
    const bool known_section =
        std::any_of(table.begin(), table.end(),
                    [&](const KeyDef& d) { return section == d.section; });
    if (!known_section) throw ValidationError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : keys) {
      const auto it = std::find_if(table.begin(), table.end(), [&](const KeyDef& d) {
        return section == d.section && key == d.key;
      });
      if (it == table.end()) {
        throw ValidationError("config: unknown key [" + section + "] " + key);
      }
      it->set(*this, section, key, value);
    }
  }
}

std::string RunConfig::describe_defaults() {
  const RunConfig defaults;
  std::ostringstream ss;
  std::string last_section;
  for (const KeyDef& d : key_table()) {
    if (d.section != last_section) {
      ss << "[" << d.section << "]\n";
      last_section = d.section;
    }
    ss << "  " << d.key << " = " << d.describe(defaults) << "\n";
  }
  return ss.str();
}

std::string RunConfig::canonical() const {
  std::ostringstream ss;
  for (const KeyDef& d : key_table()) {
    ss << d.section << "." << d.key << "=" << d.describe(*this) << "\n";
  }
  return ss.str();
}

uint64_t RunConfig::hash() const {
  const std::string s = canonical();
  return fnv1a64(s.data(), s.size());
}

}  // namespace quadmimic
