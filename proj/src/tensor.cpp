#include "birkhoff/tensor.hpp"

#include <cstring>

namespace birkhoff {

const char* dtype_name(Dtype dt) {
    switch (dt) {
    case Dtype::F32: return "F32";
    case Dtype::F16: return "F16";
    }
    return "?";
}

std::optional<Dtype> dtype_from_name(std::string_view name) {
    if (name == "F32") return Dtype::F32;
    if (name == "F16") return Dtype::F16;
    return std::nullopt;
}

std::size_t dtype_size(Dtype dt) {
    return dt == Dtype::F32 ? 4 : 2;
}

float half_to_float(uint16_t h) {
    const uint32_t sign = static_cast<uint32_t>(h & 0x8000u) << 16;
    uint32_t exp = (h >> 10) & 0x1Fu;
    uint32_t man = h & 0x3FFu;
    uint32_t bits;
    if (exp == 0) {
        if (man == 0) {
            bits = sign; // signed zero
        } else {
            // subnormal half: renormalize into a normal float
            exp = 127 - 15 + 1;
            while ((man & 0x400u) == 0) {
                man <<= 1;
                --exp;
            }
            man &= 0x3FFu;
            bits = sign | (exp << 23) | (man << 13);
        }
    } else if (exp == 0x1Fu) {
        bits = sign | 0x7F800000u | (man << 13); // inf / nan, payload kept
    } else {
        bits = sign | ((exp - 15 + 127) << 23) | (man << 13);
    }
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
}

uint16_t float_to_half(float f) {
    uint32_t x;
    std::memcpy(&x, &f, sizeof x);
    const uint16_t sign = static_cast<uint16_t>((x >> 16) & 0x8000u);
    const uint32_t exp = (x >> 23) & 0xFFu;
    const uint32_t man = x & 0x7FFFFFu;

    if (exp == 0xFFu) {
        // inf / nan; keep the top payload bits, never turn a nan into inf
        uint32_t hman = man >> 13;
        if (man != 0 && hman == 0) hman = 1;
        return static_cast<uint16_t>(sign | 0x7C00u | hman);
    }

    const int e = static_cast<int>(exp) - 127 + 15;
    if (e >= 0x1F) return static_cast<uint16_t>(sign | 0x7C00u); // overflow -> inf
    if (e <= 0) {
        if (e < -10) return sign; // underflows to signed zero
        // subnormal half, round to nearest even
        const uint32_t full = man | 0x800000u;
        const uint32_t shift = static_cast<uint32_t>(14 - e);
        uint32_t hman = full >> shift;
        const uint32_t rem = full & ((1u << shift) - 1);
        const uint32_t halfway = 1u << (shift - 1);
        if (rem > halfway || (rem == halfway && (hman & 1u))) ++hman;
        return static_cast<uint16_t>(sign | hman);
    }

    uint16_t out = static_cast<uint16_t>(sign | (static_cast<uint32_t>(e) << 10) | (man >> 13));
    const uint32_t rem = man & 0x1FFFu;
    if (rem > 0x1000u || (rem == 0x1000u && (out & 1u))) {
        ++out; // carries into the exponent when needed, which is still correct
    }
    return out;
}

} // namespace birkhoff
