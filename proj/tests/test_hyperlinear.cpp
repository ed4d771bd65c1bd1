#include <doctest.h>

#include <cmath>
#include <cstring>

#include "birkhoff/error.hpp"
#include "birkhoff/hyperlinear.hpp"
#include "test_oracles.hpp"

using namespace birkhoff;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, uint64_t seed, double spread = 1.0) {
    oracle::Rng rng(seed);
    Matrix m(rows, cols);
    for (float& v : m.data) v = static_cast<float>(rng.uniform(-spread, spread));
    return m;
}

FusedOperand make_operand(const Matrix& w, double l, uint32_t u, uint32_t m_cat) {
    const PairField pf = pair_split(w);
    const AuxParams aux = AuxParams::make(l, u, m_cat, compute_stats(pf));
    CodeMatrix codes = encode_tensor(pf, build_codebook(aux));
    return FusedOperand{std::move(codes), aux, w.rows, w.cols};
}

double max_rel(const Matrix& got, const Matrix& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        num = std::max(num, std::fabs(static_cast<double>(got.data[i]) - ref.data[i]));
        den = std::max(den, std::fabs(static_cast<double>(ref.data[i])));
    }
    return den > 0 ? num / den : num;
}

Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
    return m;
}

} // namespace

TEST_CASE("identity activations reproduce the decoded weights exactly") {
    const Matrix w = random_matrix(24, 18, 3, 0.05);
    const FusedOperand op = make_operand(w, 0.1, 64, 3);
    const Matrix decoded = decode_tensor(op.codes, op.aux, 24, 18);
    const Matrix c = fused_gemm(identity(24), op, BlockConfig{8, 8, 8});
    REQUIRE(c.rows == 24);
    REQUIRE(c.cols == 18);
    CHECK(std::memcmp(c.data.data(), decoded.data.data(), c.size() * sizeof(float)) == 0);
}

TEST_CASE("zero activations produce zeros") {
    const Matrix w = random_matrix(16, 16, 5, 0.05);
    const FusedOperand op = make_operand(w, 0.1, 64, 2);
    const Matrix a(4, 16);
    const Matrix c = fused_gemm(a, op, BlockConfig{4, 4, 4});
    for (const float v : c.data) CHECK(v == 0.0f);
}

TEST_CASE("fused matches decompress-then-naive within 1e-5 relative") {
    const Matrix a = random_matrix(32, 64, 7);
    const Matrix w = random_matrix(64, 48, 9, 0.05);
    const FusedOperand op = make_operand(w, 0.1, 1600, 3);
    const Matrix ref = gemm_naive(a, decode_tensor(op.codes, op.aux, 64, 48));
    const Matrix c = fused_gemm(a, op, BlockConfig{16, 16, 16});
    CHECK(max_rel(c, ref) <= 1e-5);
}

TEST_CASE("ragged shapes and odd weight columns are handled") {
    oracle::Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = rng.uniform_u32(1, 40);
        const std::size_t k = rng.uniform_u32(1, 40);
        const std::size_t n = rng.uniform_u32(1, 40);
        const Matrix a = random_matrix(m, k, 100 + trial);
        const Matrix w = random_matrix(k, n, 200 + trial, 0.05);
        const FusedOperand op = make_operand(w, 0.1, 49, 2);
        const BlockConfig cfg{rng.uniform_u32(1, 9),
                              2 * rng.uniform_u32(1, 5),
                              rng.uniform_u32(1, 9)};
        const Matrix ref = gemm_naive(a, decode_tensor(op.codes, op.aux, k, n));
        const Matrix c = fused_gemm(a, op, cfg);
        CHECK(max_rel(c, ref) <= 1e-5);
    }
}

TEST_CASE("fused output is bit-identical across worker counts") {
    const Matrix a = random_matrix(33, 65, 13);
    const Matrix w = random_matrix(65, 47, 15, 0.05);
    const FusedOperand op = make_operand(w, 0.1, 400, 3);
    const BlockConfig cfg{16, 16, 16};
    const Matrix base = fused_gemm(a, op, cfg, 1);
    for (const int workers : {2, 4, 8}) {
        const Matrix c = fused_gemm(a, op, cfg, workers);
        CHECK(std::memcmp(c.data.data(), base.data.data(), c.size() * sizeof(float)) == 0);
    }
}

TEST_CASE("blocked dense gemm equals naive within 1e-6 on 128^3") {
    const Matrix a = random_matrix(128, 128, 17);
    const Matrix w = random_matrix(128, 128, 19);
    const Matrix ref = gemm_naive(a, w);
    const Matrix c = gemm_blocked(a, w, BlockConfig{64, 64, 64});
    CHECK(max_rel(c, ref) <= 1e-6);
}

TEST_CASE("blocked dense gemm handles non-divisible sizes") {
    const Matrix a = random_matrix(33, 65, 21);
    const Matrix w = random_matrix(65, 47, 23);
    const Matrix ref = gemm_naive(a, w);
    const Matrix c = gemm_blocked(a, w, BlockConfig{16, 16, 16});
    CHECK(max_rel(c, ref) <= 1e-6);
}

TEST_CASE("1x1 gemm") {
    Matrix a(1, 1);
    a(0, 0) = 3.0f;
    Matrix w(1, 1);
    w(0, 0) = -2.0f;
    CHECK(gemm_naive(a, w)(0, 0) == -6.0f);
    CHECK(gemm_blocked(a, w, BlockConfig{2, 2, 2})(0, 0) == -6.0f);
}

TEST_CASE("decode_block slices match decode_tensor") {
    const Matrix w = random_matrix(20, 17, 25, 0.05);
    const FusedOperand op = make_operand(w, 0.1, 81, 3);
    const Matrix full = decode_tensor(op.codes, op.aux, 20, 17);

    SUBCASE("full range") {
        const Matrix tile = decode_block(op, 0, 20, 0, 17);
        CHECK(tile.data == full.data);
    }
    SUBCASE("disjoint tiles reassemble") {
        Matrix assembled(20, 17);
        for (std::size_t k0 = 0; k0 < 20; k0 += 7) {
            for (std::size_t j0 = 0; j0 < 17; j0 += 5) {
                const std::size_t k1 = std::min<std::size_t>(k0 + 7, 20);
                const std::size_t j1 = std::min<std::size_t>(j0 + 5, 17);
                const Matrix tile = decode_block(op, k0, k1, j0, j1);
                for (std::size_t r = k0; r < k1; ++r) {
                    for (std::size_t c = j0; c < j1; ++c) {
                        assembled(r, c) = tile(r - k0, c - j0);
                    }
                }
            }
        }
        CHECK(assembled.data == full.data);
    }
    SUBCASE("single pair tile equals decode_pair") {
        const Matrix tile = decode_block(op, 3, 4, 4, 6);
        const uint32_t code = op.codes.codes[3 * op.codes.cols + 2];
        const Vec2 d = decode_pair(code, op.aux);
        CHECK(tile(0, 0) == static_cast<float>(d.x));
        CHECK(tile(0, 1) == static_cast<float>(d.y));
    }
    SUBCASE("odd column start") {
        const Matrix tile = decode_block(op, 0, 20, 3, 10);
        for (std::size_t r = 0; r < 20; ++r) {
            for (std::size_t c = 3; c < 10; ++c) {
                CHECK(tile(r, c - 3) == full(r, c));
            }
        }
    }
}

TEST_CASE("decode_block validates ranges") {
    const Matrix w = random_matrix(8, 8, 27, 0.05);
    const FusedOperand op = make_operand(w, 0.1, 16, 1);
    CHECK_THROWS_AS(decode_block(op, 0, 9, 0, 8), invalid_input);
    CHECK_THROWS_AS(decode_block(op, 4, 4, 0, 8), invalid_input);
    CHECK_THROWS_AS(decode_block(op, 0, 8, 2, 9), invalid_input);
}

TEST_CASE("scratch memory depends on the block config, not the problem size") {
    const BlockConfig cfg{16, 32, 24};
    FusedStats small_stats{}, large_stats{};

    const Matrix w_small = random_matrix(48, 40, 29, 0.05);
    const FusedOperand op_small = make_operand(w_small, 0.1, 64, 3);
    (void)fused_gemm(random_matrix(24, 48, 31), op_small, cfg, 2, &small_stats);

    const Matrix w_large = random_matrix(320, 272, 33, 0.05);
    const FusedOperand op_large = make_operand(w_large, 0.1, 64, 3);
    (void)fused_gemm(random_matrix(96, 320, 35), op_large, cfg, 2, &large_stats);

    CHECK(small_stats.scratch_bytes == large_stats.scratch_bytes);
    // two workers, one T x S fp32 tile each, plus the (M+1)-entry scale table
    CHECK(small_stats.scratch_bytes == 2 * cfg.depth * cfg.cols * sizeof(float) +
                                           4 * sizeof(double));
    CHECK(small_stats.codes_decoded > 0);
}

TEST_CASE("every code is decoded once per block visit") {
    // K=32, N=32, cfg 8/8/8: 4 j-blocks * 4 k-blocks * (8*4 codes) per i-block
    const Matrix w = random_matrix(32, 32, 37, 0.05);
    const FusedOperand op = make_operand(w, 0.1, 64, 2);
    const BlockConfig cfg{8, 8, 8};
    FusedStats stats{};
    (void)fused_gemm(random_matrix(16, 32, 39), op, cfg, 1, &stats);
    const std::size_t i_blocks = 2;
    CHECK(stats.codes_decoded == i_blocks * 32 * 16); // all codes once per i-block
}

TEST_CASE("shape and config validation") {
    const Matrix w = random_matrix(8, 8, 41, 0.05);
    const FusedOperand op = make_operand(w, 0.1, 16, 1);
    CHECK_THROWS_AS(fused_gemm(random_matrix(4, 7, 43), op, BlockConfig{}), invalid_input);
    CHECK_THROWS_AS(fused_gemm(random_matrix(4, 8, 43), op, BlockConfig{8, 7, 8}),
                    invalid_input);
    CHECK_THROWS_AS(fused_gemm(random_matrix(4, 8, 43), op, BlockConfig{0, 8, 8}),
                    invalid_input);

    FusedOperand bad = op;
    bad.codes.codes[0] = bad.codes.max_code_bound + 5;
    CHECK_THROWS_AS(fused_gemm(random_matrix(4, 8, 43), bad, BlockConfig{8, 8, 8}),
                    corrupt_data);
}

TEST_CASE("padding neutrality: the padded column never leaks into the output") {
    // odd-column weights; compare against a reference built from the decoded
    // (already pad-stripped) matrix
    const Matrix w = random_matrix(12, 9, 45, 0.05);
    const FusedOperand op = make_operand(w, 0.1, 64, 2);
    const Matrix a = random_matrix(5, 12, 47);
    const Matrix ref = gemm_naive(a, decode_tensor(op.codes, op.aux, 12, 9));
    const Matrix c = fused_gemm(a, op, BlockConfig{4, 4, 4});
    REQUIRE(c.cols == 9);
    CHECK(max_rel(c, ref) <= 1e-5);
}
