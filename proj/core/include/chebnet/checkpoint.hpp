#pragma once

#include <cstdint>
#include <string>

#include "chebnet/nn.hpp"

namespace chebnet {

/// Checkpoint file layout (little-endian):
///   8-byte magic "CBNETCK1", u64 metadata length, metadata JSON
///   (arch/task/k/vocab/init seed/best epoch), u64 parameter count, raw
///   doubles, u64 buffer count, raw doubles.
/// Raw doubles round-trip bit-exactly.
struct CheckpointMeta {
  std::uint64_t seed = 0;
  int best_epoch = -1;
};

void save_checkpoint(const std::string& path, const Model& m, const CheckpointMeta& meta = {});

struct LoadedCheckpoint {
  Model model;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace chebnet
