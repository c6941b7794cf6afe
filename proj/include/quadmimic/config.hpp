#pragma once

#include "quadmimic/policy.hpp"
#include "quadmimic/simenv.hpp"
#include "quadmimic/trainer.hpp"

#include <iosfwd>
#include <map>
#include <string>

namespace quadmimic {

// Minimal INI: [section] headers, key = value lines, # and ; comments.
struct ConfigFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static ConfigFile parse(std::istream& in, const std::string& name);
  static ConfigFile load(const std::string& path);
};

// Everything a run needs; sections [trainer], [policy], [sim].
struct RunConfig {
  PpoConfig trainer;
  NetworkSizes policy;
  SimConfig sim;

  // Applies file values over the defaults. Unknown sections or keys throw
  // ValidationError naming the offender.
  void apply(const ConfigFile& file);

  // One line per key with its current value; embedded in --help.
  static std::string describe_defaults();

  // Canonical serialization (sorted keys) used for the provenance hash.
  std::string canonical() const;
  uint64_t hash() const;
};

}  // namespace quadmimic
