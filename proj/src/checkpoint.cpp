#include "quadmimic/checkpoint.hpp"

#include "quadmimic/errors.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>

namespace quadmimic {

uint64_t fnv1a64(const void* data, size_t bytes, uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

uint64_t policy_param_hash(const Policy& p) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (const auto& t : p.tensor_refs()) {
    h = fnv1a64(t.data, sizeof(double) * t.size, h);
  }
  return h;
}

namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'Q', 'M', 'C', 'K'};

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), s.size());
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw ParseError("checkpoint: truncated");
  }
  return v;
}
uint64_t read_u64(std::istream& in) {
  uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw ParseError("checkpoint: truncated");
  }
  return v;
}
std::string read_string(std::istream& in) {
  const uint32_t len = read_u32(in);
  if (len > (1u << 28)) throw ParseError("checkpoint: absurd string length");
  std::string s(len, '\0');
  if (!in.read(s.data(), len)) throw ParseError("checkpoint: truncated");
  return s;
}

json meta_json(const Checkpoint& ck) {
  const Policy& p = ck.policy;
  json j;
  j["stage"] = static_cast<int>(p.stage());
  j["ref_feature_dim"] = p.ref_feature_dim();
  j["encoder_hidden"] = p.sizes().encoder_hidden;
  j["controller_hidden"] = p.sizes().controller_hidden;
  j["value_hidden"] = p.sizes().value_hidden;
  j["extero_embed"] = p.sizes().extero_embed;
  j["controller_frozen"] = p.controller_frozen;
  json cur = json::array();
  for (const CurriculumState& c : ck.curricula) {
    json e;
    e["level"] = std::vector<int>(c.level.begin(), c.level.end());
    e["streak"] = c.success_streak;
    cur.push_back(e);
  }
  j["curricula"] = cur;
  return j;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");

  out.write(kMagic, 4);
  write_u32(out, ck.version);
  write_u64(out, ck.train_step);
  write_u64(out, ck.stage1_param_hash);
  write_string(out, meta_json(ck).dump());

  const auto refs = ck.policy.tensor_refs();
  write_u32(out, static_cast<uint32_t>(refs.size()));
  for (const auto& t : refs) {
    write_string(out, t.name);
    write_u64(out, static_cast<uint64_t>(t.size));
    out.write(reinterpret_cast<const char*>(t.data), sizeof(double) * t.size);
  }
  if (!out) throw IoError("write failed for checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("checkpoint '" + path + "': bad magic");
  }
  Checkpoint ck;
  ck.version = read_u32(in);
  if (ck.version != 1) {
    throw ValidationError("checkpoint '" + path + "': unsupported version " +
                          std::to_string(ck.version));
  }
  ck.train_step = read_u64(in);
  ck.stage1_param_hash = read_u64(in);

  json meta;
  try {
    meta = json::parse(read_string(in));
  } catch (const json::parse_error& e) {
    throw ParseError("checkpoint '" + path + "': bad metadata: " + e.what());
  }

  try {
    const int stage_int = meta.at("stage").get<int>();
    if (stage_int != 1 && stage_int != 2) {
      throw ValidationError("checkpoint '" + path + "': bad stage");
    }
    NetworkSizes sizes;
    sizes.encoder_hidden = meta.at("encoder_hidden").get<std::vector<int>>();
    sizes.controller_hidden = meta.at("controller_hidden").get<std::vector<int>>();
    sizes.value_hidden = meta.at("value_hidden").get<std::vector<int>>();
    sizes.extero_embed = meta.at("extero_embed").get<int>();
    ck.policy = Policy(static_cast<Stage>(stage_int), sizes,
                       meta.at("ref_feature_dim").get<int>(), 0);
    ck.policy.controller_frozen = meta.at("controller_frozen").get<bool>();
    const auto& cur = meta.at("curricula");
    if (cur.size() != kNumTerrainKinds) {
      throw ValidationError("checkpoint '" + path + "': bad curriculum count");
    }
    for (size_t i = 0; i < kNumTerrainKinds; ++i) {
      const auto lv = cur.at(i).at("level").get<std::vector<int>>();
      if (lv.size() != kNumCurriculumParams) {
        throw ValidationError("checkpoint '" + path + "': bad curriculum width");
      }
      std::copy(lv.begin(), lv.end(), ck.curricula[i].level.begin());
      ck.curricula[i].success_streak = cur.at(i).at("streak").get<int>();
    }
  } catch (const json::exception& e) {
    throw ParseError("checkpoint '" + path + "': metadata: " + e.what());
  }

  const uint32_t n_tensors = read_u32(in);
  auto refs = ck.policy.tensor_refs();
  if (n_tensors != refs.size()) {
    throw ValidationError("checkpoint '" + path + "': tensor count " +
                          std::to_string(n_tensors) + ", expected " +
                          std::to_string(refs.size()));
  }
  for (auto& t : refs) {
    const std::string name = read_string(in);
    if (name != t.name) {
      throw ValidationError("checkpoint '" + path + "': tensor '" + name + "', expected '" +
                            t.name + "'");
    }
    const uint64_t size = read_u64(in);
    if (size != static_cast<uint64_t>(t.size)) {
      throw ValidationError("checkpoint '" + path + "': tensor '" + name + "' has " +
                            std::to_string(size) + " values, expected " +
                            std::to_string(t.size));
    }
    if (!in.read(reinterpret_cast<char*>(t.data), sizeof(double) * t.size)) {
      throw ParseError("checkpoint '" + path + "': truncated tensor '" + name + "'");
    }
  }
  return ck;
}

}  // namespace quadmimic
