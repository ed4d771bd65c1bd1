#pragma once

#include <cstddef>
#include <cstdint>

#include "birkhoff/codec.hpp"

namespace birkhoff {

// Output-row, output-column and reduction block sizes. Columns come in pairs
// (one code decodes two adjacent weights), so the column block must be even.
struct BlockConfig {
    std::size_t rows = 64;  // R
    std::size_t cols = 64;  // S, even
    std::size_t depth = 64; // T
};

// A compressed weight matrix ready for fused multiplication: codes plus the
// sidecar, with the logical (unpadded) weight shape.
struct FusedOperand {
    CodeMatrix codes; // K x ceil(N/2)
    AuxParams aux;
    std::size_t weight_rows = 0; // K
    std::size_t weight_cols = 0; // N

    bool pad_applied() const { return weight_cols % 2 != 0; }
};

struct FusedStats {
    std::size_t scratch_bytes = 0; // peak per-call auxiliary memory
    std::size_t codes_decoded = 0;
};

// C = A * decode(op) without ever materializing the weight matrix: each worker
// decodes one T x S tile at a time inside the reduction loop. k-blocks are
// accumulated in ascending order per output block, so results are bit-identical
// for any worker count.
Matrix fused_gemm(const Matrix& a, const FusedOperand& op, const BlockConfig& cfg,
                  int workers = 0, FusedStats* stats = nullptr);

// Serial reference: the equivalence oracle for everything else.
Matrix gemm_naive(const Matrix& a, const Matrix& w);

// Cache-blocked dense GEMM with the same loop structure as the fused kernel;
// the dense baseline for benchmarks.
Matrix gemm_blocked(const Matrix& a, const Matrix& w, const BlockConfig& cfg, int workers = 0);

// Decode rows [k0,k1) x columns [j0,j1) of the logical weight matrix.
Matrix decode_block(const FusedOperand& op, std::size_t k0, std::size_t k1, std::size_t j0,
                    std::size_t j1);

} // namespace birkhoff
