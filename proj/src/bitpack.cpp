#include "birkhoff/bitpack.hpp"

#include <bit>
#include <string>

#include "birkhoff/error.hpp"

namespace birkhoff {

uint32_t bits_for_bound(uint64_t bound) {
    if (bound < 2) {
        throw invalid_input("bits_for_bound: bound must be at least 2");
    }
    return static_cast<uint32_t>(std::bit_width(bound - 1));
}

PackedPayload pack_codes(std::span<const uint32_t> codes, uint32_t bit_width) {
    if (bit_width == 0 || bit_width > 32) {
        throw invalid_input("pack_codes: bit width must be in [1, 32]");
    }
    PackedPayload p;
    p.bit_width = bit_width;
    p.code_count = codes.size();
    p.bytes.assign((codes.size() * bit_width + 7) / 8, 0);

    uint64_t acc = 0;
    uint32_t nbits = 0;
    std::size_t out = 0;
    for (const uint32_t code : codes) {
        if (bit_width < 32 && (code >> bit_width) != 0) {
            throw invalid_input("pack_codes: value " + std::to_string(code) +
                                " exceeds " + std::to_string(bit_width) + " bits");
        }
        acc |= static_cast<uint64_t>(code) << nbits;
        nbits += bit_width;
        while (nbits >= 8) {
            p.bytes[out++] = static_cast<uint8_t>(acc & 0xFFu);
            acc >>= 8;
            nbits -= 8;
        }
    }
    if (nbits > 0) {
        p.bytes[out++] = static_cast<uint8_t>(acc & 0xFFu);
    }
    return p;
}

std::vector<uint32_t> unpack_codes(const PackedPayload& payload) {
    if (payload.bit_width == 0 || payload.bit_width > 32) {
        throw corrupt_data("unpack_codes: bad bit width");
    }
    const uint64_t expected = (payload.code_count * payload.bit_width + 7) / 8;
    if (payload.bytes.size() != expected) {
        throw corrupt_data("unpack_codes: payload is " + std::to_string(payload.bytes.size()) +
                           " bytes, expected " + std::to_string(expected));
    }

    std::vector<uint32_t> codes(payload.code_count);
    uint64_t acc = 0;
    uint32_t nbits = 0;
    std::size_t in = 0;
    const uint64_t mask =
        payload.bit_width == 32 ? 0xFFFFFFFFull : ((1ull << payload.bit_width) - 1);
    for (uint64_t i = 0; i < payload.code_count; ++i) {
        while (nbits < payload.bit_width) {
            acc |= static_cast<uint64_t>(payload.bytes[in++]) << nbits;
            nbits += 8;
        }
        codes[i] = static_cast<uint32_t>(acc & mask);
        acc >>= payload.bit_width;
        nbits -= payload.bit_width;
    }
    if (acc != 0) {
        throw corrupt_data("unpack_codes: nonzero trailing pad bits");
    }
    return codes;
}

} // namespace birkhoff
