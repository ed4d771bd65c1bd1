#pragma once

#include <cstdint>
#include <vector>

#include "birkhoff/tensor.hpp"

namespace birkhoff {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Chebyshev distance; "inside the box" <=> linf distance from the centroid <= l/2.
double linf_dist(Vec2 a, Vec2 b);

enum class CodebookKind : uint8_t {
    GridLattice = 0,       // centered V x V lattice over the box, V = ceil(sqrt(U))
    LiteralTrajectory = 1, // wrapped straight-line trajectory, kept for study
};

// A matrix viewed as per-row 1x2 parameter pairs. Odd column counts are padded
// with the row mean of the second pair elements so every row splits evenly.
struct PairField {
    std::size_t rows = 0;        // K
    std::size_t orig_cols = 0;   // N
    std::size_t padded_cols = 0; // N', always even
    bool pad_applied = false;
    std::vector<float> values;   // rows * padded_cols, row-major

    std::size_t pairs_per_row() const { return padded_cols / 2; }
    std::size_t pair_count() const { return rows * pairs_per_row(); }
    Vec2 pair(std::size_t g) const {
        return Vec2{values[2 * g], values[2 * g + 1]};
    }
};

struct BoxStats {
    Vec2 centroid;
    double l_f = 0.0; // farthest pair distance from the centroid
};

// Per-tensor decoding sidecar. Constant-size; everything needed to rebuild the
// codebook and undo the category scaling.
struct AuxParams {
    double l = 0.0;   // box side length
    uint32_t U = 0;   // codebook size; for GridLattice always a perfect square
    uint32_t M = 0;   // category count
    BoxStats stats;
    CodebookKind kind = CodebookKind::GridLattice;
    double delta = 0.0; // trajectory step, derived from (l, U); lattice ignores it

    uint32_t grid_dim() const; // V with V*V == U (GridLattice only)
    uint32_t max_code_bound() const { return (M + 1) * U; }

    // Validates and normalizes: GridLattice rounds requested_u up to the next
    // perfect square; the trajectory step is fixed so the first coordinate
    // advances by l/U per index increment.
    static AuxParams make(double l, uint32_t requested_u, uint32_t m, BoxStats stats,
                          CodebookKind kind = CodebookKind::GridLattice);
};

struct Codebook {
    AuxParams params;
    std::vector<Vec2> points; // c(theta), theta = 0..U-1, all inside the closed box
};

// Integer codes theta* + m*U, one per pair.
struct CodeMatrix {
    std::size_t rows = 0;         // K
    std::size_t cols = 0;         // N'/2
    uint32_t max_code_bound = 0;  // (M+1)*U
    std::vector<uint32_t> codes;  // row-major

    std::size_t size() const { return codes.size(); }
};

PairField pair_split(const Matrix& w);
BoxStats compute_stats(const PairField& pf);

// Category 0 = inside the box; outliers are tiered by distance, tier picks the
// scaling factor that pulls the point inside before encoding.
uint32_t assign_category(Vec2 pair, const BoxStats& stats, double l, uint32_t m_count);
double scale_factor(uint32_t m, uint32_t m_count, double l, double l_f);

// c(theta) evaluated directly from aux; O(1) random access for any theta < U.
Vec2 codebook_point(const AuxParams& aux, uint32_t theta);
Codebook build_codebook(const AuxParams& aux);

// True when any pair can fall outside the box (l_f > l/2); otherwise only
// category 0 exists and codes must stay below U.
bool outliers_possible(const AuxParams& aux);
uint32_t valid_code_bound(const AuxParams& aux);

// Scale factor per category, computed once. Entries for categories that cannot
// occur (box already covers everything) are NaN and must never be read.
std::vector<double> category_scales(const AuxParams& aux);

// The category scaling and its inverse. s = 1 short-circuits so category-0
// points pass through bit-for-bit; every decode path must share these.
inline Vec2 scale_toward_centroid(Vec2 w, Vec2 centroid, double s) {
    if (s == 1.0) return w;
    return Vec2{(w.x - centroid.x) * s + centroid.x, (w.y - centroid.y) * s + centroid.y};
}

inline Vec2 unscale_from_centroid(Vec2 c, Vec2 centroid, double s) {
    if (s == 1.0) return c;
    return Vec2{(c.x - centroid.x) / s + centroid.x, (c.y - centroid.y) / s + centroid.y};
}

uint32_t encode_pair(Vec2 pair, const Codebook& cb);
Vec2 decode_pair(uint32_t code, const AuxParams& aux);

CodeMatrix encode_tensor(const PairField& pf, const Codebook& cb);
Matrix decode_tensor(const CodeMatrix& cm, const AuxParams& aux, std::size_t rows,
                     std::size_t cols);

// Mean absolute element-wise error over the original (unpadded) entries.
double mae(const Matrix& a, const Matrix& b);

// Fraction of pairs already inside the box; diagnostic for picking l.
double inner_proportion(const PairField& pf, const BoxStats& stats, double l);

} // namespace birkhoff
