#pragma once

#include <cstdint>
#include <string>

#include "fmce/nn.hpp"

namespace fmce {

// Checkpoint file: little-endian, magic "FMCK", u32 format version,
// u32 layer count, then per layer a kind tag (u8), a parameter flag (u8),
// and for parameterized layers the weight and bias tensors as four u32
// dims followed by raw 32-bit data.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ModelGraph& model, const std::string& path);

// Loads parameters into a model with the same stack; rejects unknown
// magic/version and any layer kind or shape mismatch.
void load_checkpoint_into(ModelGraph& model, const std::string& path);

}  // namespace fmce
