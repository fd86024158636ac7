#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bip/nn.hpp"

namespace bip {

// Binary checkpoint: magic "BIPCKPT1", little-endian u32 layer count, per
// layer u32 rank + u32 dims, all parameters as little-endian IEEE-754 f32 in
// layout order, then an optional "MASK" section of n bytes in {0,1}.
// Parameters are stored 32-bit; the in-memory 64-bit values are rounded.
struct CheckpointData {
    std::vector<std::vector<int>> shapes;
    ParamVector params;  // values after the f32 round-trip
    std::optional<std::vector<std::uint8_t>> mask;
};

void write_checkpoint(std::ostream& os, const Layout& layout, const ParamVector& params,
                      const std::vector<std::uint8_t>* mask_bits = nullptr);
void write_checkpoint_file(const std::string& path, const Layout& layout, const ParamVector& params,
                           const std::vector<std::uint8_t>* mask_bits = nullptr);

CheckpointData read_checkpoint(std::istream& is);
CheckpointData read_checkpoint_file(const std::string& path);

}  // namespace bip
