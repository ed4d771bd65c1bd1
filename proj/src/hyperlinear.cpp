#include "birkhoff/hyperlinear.hpp"

#include <algorithm>
#include <atomic>
#include <vector>

#include <omp.h>

#include "birkhoff/error.hpp"

namespace birkhoff {

namespace {

void validate_operand(const FusedOperand& op) {
    if (op.weight_rows == 0 || op.weight_cols == 0) {
        throw invalid_input("fused operand: empty weight shape");
    }
    if (op.codes.rows != op.weight_rows || op.codes.cols != (op.weight_cols + 1) / 2) {
        throw corrupt_data("fused operand: code matrix does not match weight shape");
    }
    if (op.codes.max_code_bound != op.aux.max_code_bound()) {
        throw corrupt_data("fused operand: aux does not match code matrix");
    }
    const uint32_t bound = valid_code_bound(op.aux);
    for (const uint32_t c : op.codes.codes) {
        if (c >= bound) {
            throw corrupt_data("fused operand: code out of range");
        }
    }
}

void validate_config(const BlockConfig& cfg) {
    if (cfg.rows == 0 || cfg.cols == 0 || cfg.depth == 0) {
        throw invalid_input("block config: sizes must be positive");
    }
    if (cfg.cols % 2 != 0) {
        throw invalid_input("block config: column block must be even");
    }
}

// Decode codes covering weight rows [k0,k1) x columns [j0,j1) into a dense
// row-major tile of stride `stride`. Columns outside [j0,j1) (the padded one
// on a ragged edge) are computed and dropped.
inline void decode_tile(const FusedOperand& op, const std::vector<double>& scales,
                        std::size_t k0, std::size_t k1, std::size_t j0, std::size_t j1,
                        float* tile, std::size_t stride) {
    const AuxParams& aux = op.aux;
    const Vec2 ct = aux.stats.centroid;
    const std::size_t jp0 = j0 / 2;
    const std::size_t jp1 = (j1 + 1) / 2;
    for (std::size_t k = k0; k < k1; ++k) {
        const uint32_t* codes = op.codes.codes.data() + k * op.codes.cols;
        float* out = tile + (k - k0) * stride;
        for (std::size_t jp = jp0; jp < jp1; ++jp) {
            const uint32_t code = codes[jp];
            const Vec2 d = unscale_from_centroid(codebook_point(aux, code % aux.U), ct,
                                                 scales[code / aux.U]);
            const std::size_t col = 2 * jp;
            if (col >= j0 && col < j1) out[col - j0] = static_cast<float>(d.x);
            if (col + 1 >= j0 && col + 1 < j1) out[col + 1 - j0] = static_cast<float>(d.y);
        }
    }
}

} // namespace

Matrix fused_gemm(const Matrix& a, const FusedOperand& op, const BlockConfig& cfg, int workers,
                  FusedStats* stats) {
    validate_config(cfg);
    validate_operand(op);
    if (a.cols != op.weight_rows || a.rows == 0) {
        throw invalid_input("fused_gemm: inner dimensions do not match");
    }

    const std::size_t m = a.rows;
    const std::size_t k_dim = op.weight_rows;
    const std::size_t n = op.weight_cols;
    const std::size_t nb_i = (m + cfg.rows - 1) / cfg.rows;
    const std::size_t nb_j = (n + cfg.cols - 1) / cfg.cols;
    const std::size_t nb_k = (k_dim + cfg.depth - 1) / cfg.depth;

    const std::vector<double> scales = category_scales(op.aux);
    Matrix c(m, n);

    const int nthreads = workers > 0 ? workers : omp_get_max_threads();
    std::atomic<std::size_t> scratch{scales.size() * sizeof(double)};
    std::atomic<std::size_t> decoded{0};

#pragma omp parallel num_threads(nthreads)
    {
        // one tile per worker; auxiliary memory stays O(T*S) regardless of K*N
        std::vector<float> tile(cfg.depth * cfg.cols);
        scratch.fetch_add(tile.size() * sizeof(float), std::memory_order_relaxed);
        std::size_t local_decoded = 0;

#pragma omp for schedule(static)
        for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nb_i * nb_j); ++blk) {
            const std::size_t ib = static_cast<std::size_t>(blk) / nb_j;
            const std::size_t jb = static_cast<std::size_t>(blk) % nb_j;
            const std::size_t i0 = ib * cfg.rows;
            const std::size_t i1 = std::min(i0 + cfg.rows, m);
            const std::size_t j0 = jb * cfg.cols;
            const std::size_t j1 = std::min(j0 + cfg.cols, n);
            const std::size_t jw = j1 - j0;

            // ascending k-blocks: the accumulation order every worker count shares
            for (std::size_t kb = 0; kb < nb_k; ++kb) {
                const std::size_t k0 = kb * cfg.depth;
                const std::size_t k1 = std::min(k0 + cfg.depth, k_dim);
                decode_tile(op, scales, k0, k1, j0, j1, tile.data(), cfg.cols);
                local_decoded += (k1 - k0) * ((j1 + 1) / 2 - j0 / 2);

                for (std::size_t r = i0; r < i1; ++r) {
                    float* crow = c.data.data() + r * n + j0;
                    const float* arow = a.data.data() + r * k_dim;
                    for (std::size_t kk = k0; kk < k1; ++kk) {
                        const float av = arow[kk];
                        const float* trow = tile.data() + (kk - k0) * cfg.cols;
                        for (std::size_t cc = 0; cc < jw; ++cc) {
                            crow[cc] += av * trow[cc];
                        }
                    }
                }
            }
        }
        decoded.fetch_add(local_decoded, std::memory_order_relaxed);
    }

    if (stats != nullptr) {
        stats->scratch_bytes = scratch.load();
        stats->codes_decoded = decoded.load();
    }
    return c;
}

Matrix gemm_naive(const Matrix& a, const Matrix& w) {
    if (a.cols != w.rows) {
        throw invalid_input("gemm_naive: inner dimensions do not match");
    }
    Matrix c(a.rows, w.cols);
    for (std::size_t r = 0; r < a.rows; ++r) {
        for (std::size_t col = 0; col < w.cols; ++col) {
            float acc = 0.0f;
            for (std::size_t k = 0; k < a.cols; ++k) {
                acc += a(r, k) * w(k, col);
            }
            c(r, col) = acc;
        }
    }
    return c;
}

Matrix gemm_blocked(const Matrix& a, const Matrix& w, const BlockConfig& cfg, int workers) {
    validate_config(cfg);
    if (a.cols != w.rows) {
        throw invalid_input("gemm_blocked: inner dimensions do not match");
    }
    const std::size_t m = a.rows;
    const std::size_t k_dim = w.rows;
    const std::size_t n = w.cols;
    const std::size_t nb_i = (m + cfg.rows - 1) / cfg.rows;
    const std::size_t nb_j = (n + cfg.cols - 1) / cfg.cols;
    const std::size_t nb_k = (k_dim + cfg.depth - 1) / cfg.depth;

    Matrix c(m, n);
    const int nthreads = workers > 0 ? workers : omp_get_max_threads();

#pragma omp parallel for schedule(static) num_threads(nthreads)
    for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nb_i * nb_j); ++blk) {
        const std::size_t ib = static_cast<std::size_t>(blk) / nb_j;
        const std::size_t jb = static_cast<std::size_t>(blk) % nb_j;
        const std::size_t i0 = ib * cfg.rows;
        const std::size_t i1 = std::min(i0 + cfg.rows, m);
        const std::size_t j0 = jb * cfg.cols;
        const std::size_t j1 = std::min(j0 + cfg.cols, n);

        for (std::size_t kb = 0; kb < nb_k; ++kb) {
            const std::size_t k0 = kb * cfg.depth;
            const std::size_t k1 = std::min(k0 + cfg.depth, k_dim);
            for (std::size_t r = i0; r < i1; ++r) {
                float* crow = c.data.data() + r * n + j0;
                const float* arow = a.data.data() + r * k_dim;
                for (std::size_t kk = k0; kk < k1; ++kk) {
                    const float av = arow[kk];
                    const float* wrow = w.data.data() + kk * n + j0;
                    for (std::size_t cc = 0; cc < j1 - j0; ++cc) {
                        crow[cc] += av * wrow[cc];
                    }
                }
            }
        }
    }
    return c;
}

Matrix decode_block(const FusedOperand& op, std::size_t k0, std::size_t k1, std::size_t j0,
                    std::size_t j1) {
    validate_operand(op);
    if (k0 >= k1 || j0 >= j1 || k1 > op.weight_rows || j1 > op.weight_cols) {
        throw invalid_input("decode_block: range out of bounds");
    }
    const std::vector<double> scales = category_scales(op.aux);
    Matrix tile(k1 - k0, j1 - j0);
    decode_tile(op, scales, k0, k1, j0, j1, tile.data.data(), j1 - j0);
    return tile;
}

} // namespace birkhoff
