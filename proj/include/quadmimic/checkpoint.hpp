#pragma once

#include "quadmimic/policy.hpp"
#include "quadmimic/terrain.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace quadmimic {

// FNV-1a over a byte range.
uint64_t fnv1a64(const void* data, size_t bytes, uint64_t seed = 0xCBF29CE484222325ull);

// Hash of all policy parameter tensors in their canonical order.
uint64_t policy_param_hash(const Policy& p);

struct Checkpoint {
  uint32_t version = 1;
  Policy policy;
  uint64_t train_step = 0;
  // hash of the stage-1 parameters this stage-2 run was built from; 0 in stage 1
  uint64_t stage1_param_hash = 0;
  std::array<CurriculumState, kNumTerrainKinds> curricula{};
};

// Versioned binary container: magic + metadata json + named tensors. Loading
// rejects unknown versions, bad magic, truncation and shape mismatches.
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace quadmimic
