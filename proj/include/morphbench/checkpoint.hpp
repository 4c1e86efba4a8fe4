#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "morphbench/tensor.hpp"

namespace morphbench {

// Identity of the network a parameter set belongs to. Enough to rebuild the
// graph and resume evaluation.
struct CheckpointMeta {
  std::string family;
  std::string config;
  double dropout_rate = 0.2;
  uint64_t seed = 0;
};

// Container layout: magic "MBCK", little-endian u64 JSON length, JSON
// metadata (identity plus named tensor shapes and trainable flags), then the
// tensors' float32 payloads in listed order. Values are stored in float32;
// save -> load -> save reproduces the file byte for byte.
void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const ParameterSet& params);
std::pair<CheckpointMeta, ParameterSet> load_checkpoint(const std::string& path);

}  // namespace morphbench
