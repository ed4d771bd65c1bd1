#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace birkhoff {

// Fixed-width little-endian bit stream: value bits are laid down LSB-first
// within each byte, trailing pad bits in the last byte are zero.
struct PackedPayload {
    uint32_t bit_width = 0;
    uint64_t code_count = 0;
    std::vector<uint8_t> bytes;
};

// Bits needed to store every value < bound, i.e. ceil(log2(bound)). bound >= 2.
uint32_t bits_for_bound(uint64_t bound);

PackedPayload pack_codes(std::span<const uint32_t> codes, uint32_t bit_width);
std::vector<uint32_t> unpack_codes(const PackedPayload& payload);

} // namespace birkhoff
