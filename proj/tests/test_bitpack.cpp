#include <doctest.h>

#include "birkhoff/bitpack.hpp"
#include "birkhoff/error.hpp"
#include "test_oracles.hpp"

using namespace birkhoff;

TEST_CASE("bits_for_bound") {
    CHECK(bits_for_bound(2) == 1);
    CHECK(bits_for_bound(256) == 8);
    CHECK(bits_for_bound(257) == 9);
    // U=1600, M=3: bound (M+1)*U = 6400 -> 13-bit codes, 6.5 bits per parameter
    CHECK(bits_for_bound(4 * 1600) == 13);
    CHECK(bits_for_bound(8192) == 13);
    CHECK_THROWS_AS(bits_for_bound(1), invalid_input);
}

TEST_CASE("single zero code at 13 bits occupies two bytes") {
    const uint32_t codes[] = {0};
    const PackedPayload p = pack_codes(codes, 13);
    CHECK(p.bytes.size() == 2);
    CHECK(p.bytes[0] == 0);
    CHECK(p.bytes[1] == 0);
    CHECK(unpack_codes(p) == std::vector<uint32_t>{0});
}

TEST_CASE("bit layout is little-endian within bytes") {
    // 3-bit values 0b101, 0b011 -> byte 0b00011101 = 0x1D
    const uint32_t codes[] = {5, 3};
    const PackedPayload p = pack_codes(codes, 3);
    REQUIRE(p.bytes.size() == 1);
    CHECK(p.bytes[0] == 0x1D);
}

TEST_CASE("round trip across widths") {
    oracle::Rng rng(3);
    for (uint32_t b = 8; b <= 20; ++b) {
        std::vector<uint32_t> codes(4097);
        const uint32_t bound = 1u << b;
        for (uint32_t& c : codes) c = rng.uniform_u32(0, bound - 1);
        const PackedPayload p = pack_codes(codes, b);
        CHECK(p.bytes.size() == (codes.size() * b + 7) / 8);
        CHECK(unpack_codes(p) == codes);
    }
}

TEST_CASE("width 1 and width 32 edges") {
    const std::vector<uint32_t> bits{1, 0, 1, 1, 0, 0, 0, 1, 1};
    const PackedPayload p1 = pack_codes(bits, 1);
    CHECK(p1.bytes.size() == 2);
    CHECK(unpack_codes(p1) == bits);

    const std::vector<uint32_t> wide{0xFFFFFFFFu, 0, 0x12345678u};
    const PackedPayload p32 = pack_codes(wide, 32);
    CHECK(unpack_codes(p32) == wide);
}

TEST_CASE("values beyond the width are an encoder bug") {
    const uint32_t codes[] = {9};
    CHECK_THROWS_AS(pack_codes(codes, 3), invalid_input);
    CHECK_THROWS_AS(pack_codes(codes, 0), invalid_input);
    CHECK_THROWS_AS(pack_codes(codes, 33), invalid_input);
}

TEST_CASE("truncated payloads are rejected") {
    const std::vector<uint32_t> codes{100, 200, 300};
    PackedPayload p = pack_codes(codes, 9);
    p.bytes.pop_back();
    CHECK_THROWS_AS(unpack_codes(p), corrupt_data);
}

TEST_CASE("nonzero trailing pad bits are rejected") {
    const std::vector<uint32_t> codes{1};
    PackedPayload p = pack_codes(codes, 3);
    p.bytes[0] |= 0x80; // flip a pad bit
    CHECK_THROWS_AS(unpack_codes(p), corrupt_data);
}
