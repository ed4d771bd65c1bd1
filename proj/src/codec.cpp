#include "birkhoff/codec.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "birkhoff/error.hpp"

namespace birkhoff {

double linf_dist(Vec2 a, Vec2 b) {
    return std::max(std::fabs(a.x - b.x), std::fabs(a.y - b.y));
}

PairField pair_split(const Matrix& w) {
    if (w.rows == 0 || w.cols == 0) {
        throw invalid_input("pair_split: matrix must be at least 1x1");
    }
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t c = 0; c < w.cols; ++c) {
            if (!std::isfinite(w(r, c))) {
                throw invalid_input("pair_split: non-finite value at (" + std::to_string(r) +
                                    ", " + std::to_string(c) + ")");
            }
        }
    }

    PairField pf;
    pf.rows = w.rows;
    pf.orig_cols = w.cols;
    pf.pad_applied = (w.cols % 2) != 0;
    pf.padded_cols = w.cols + (pf.pad_applied ? 1 : 0);
    pf.values.resize(pf.rows * pf.padded_cols);

    for (std::size_t r = 0; r < w.rows; ++r) {
        float* dst = pf.values.data() + r * pf.padded_cols;
        const float* src = w.data.data() + r * w.cols;
        std::copy(src, src + w.cols, dst);
        if (pf.pad_applied) {
            if (w.cols == 1) {
                dst[w.cols] = src[0]; // degenerate single-column row
            } else {
                // mean of the second element of each complete pair
                double sum = 0.0;
                for (std::size_t c = 1; c + 1 < w.cols; c += 2) sum += src[c];
                dst[w.cols] = static_cast<float>(2.0 * sum / static_cast<double>(w.cols - 1));
            }
        }
    }
    return pf;
}

BoxStats compute_stats(const PairField& pf) {
    if (pf.pair_count() == 0) {
        throw invalid_input("compute_stats: empty pair field");
    }
    const std::size_t rows = pf.rows;
    const std::size_t ppr = pf.pairs_per_row();

    // Per-row partials reduced in row order: deterministic for any thread count.
    std::vector<double> sx(rows, 0.0), sy(rows, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
        const float* v = pf.values.data() + static_cast<std::size_t>(r) * pf.padded_cols;
        double px = 0.0, py = 0.0;
        for (std::size_t j = 0; j < ppr; ++j) {
            px += v[2 * j];
            py += v[2 * j + 1];
        }
        sx[static_cast<std::size_t>(r)] = px;
        sy[static_cast<std::size_t>(r)] = py;
    }
    double tx = 0.0, ty = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        tx += sx[r];
        ty += sy[r];
    }
    const double g = static_cast<double>(pf.pair_count());
    BoxStats st;
    st.centroid = Vec2{tx / g, ty / g};

    std::vector<double> rowmax(rows, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
        const float* v = pf.values.data() + static_cast<std::size_t>(r) * pf.padded_cols;
        double mx = 0.0;
        for (std::size_t j = 0; j < ppr; ++j) {
            const double d = linf_dist(Vec2{v[2 * j], v[2 * j + 1]}, st.centroid);
            if (d > mx) mx = d;
        }
        rowmax[static_cast<std::size_t>(r)] = mx;
    }
    st.l_f = 0.0;
    for (std::size_t r = 0; r < rows; ++r) st.l_f = std::max(st.l_f, rowmax[r]);
    return st;
}

uint32_t assign_category(Vec2 pair, const BoxStats& stats, double l, uint32_t m_count) {
    if (!(l > 0.0) || !std::isfinite(l)) {
        throw invalid_input("assign_category: box length must be positive");
    }
    const double d = linf_dist(pair, stats.centroid);
    if (d <= l / 2.0) return 0;
    // d > l/2 implies l_f >= d > l/2, so the denominator is positive
    assert(2.0 * stats.l_f - l > 0.0);
    const double raw = std::ceil(static_cast<double>(m_count) * (2.0 * d - l) /
                                 (2.0 * stats.l_f - l));
    if (raw < 1.0) return 1;
    if (raw >= static_cast<double>(m_count)) return m_count;
    return static_cast<uint32_t>(raw);
}

double scale_factor(uint32_t m, uint32_t m_count, double l, double l_f) {
    if (!(l > 0.0) || !std::isfinite(l) || !std::isfinite(l_f)) {
        throw invalid_input("scale_factor: bad parameters");
    }
    if (m_count == 0 || m > m_count) {
        throw invalid_input("scale_factor: category out of range");
    }
    if (m == 0) return 1.0;
    const double denom =
        l + (static_cast<double>(m) / static_cast<double>(m_count)) * (2.0 * l_f - l);
    if (!(denom > 0.0)) {
        throw invalid_input("scale_factor: non-positive denominator");
    }
    return l / denom;
}

uint32_t AuxParams::grid_dim() const {
    const auto v = static_cast<uint32_t>(std::lround(std::sqrt(static_cast<double>(U))));
    assert(kind == CodebookKind::GridLattice && v * v == U);
    return v;
}

AuxParams AuxParams::make(double l, uint32_t requested_u, uint32_t m, BoxStats stats,
                          CodebookKind kind) {
    if (!(l > 0.0) || !std::isfinite(l)) {
        throw invalid_input("aux: box length must be positive and finite");
    }
    if (requested_u < 2 || requested_u > (1u << 30)) {
        throw invalid_input("aux: codebook size must be in [2, 2^30]");
    }
    if (m < 1) {
        throw invalid_input("aux: category count must be at least 1");
    }
    if (!std::isfinite(stats.centroid.x) || !std::isfinite(stats.centroid.y) ||
        !std::isfinite(stats.l_f) || stats.l_f < 0.0) {
        throw invalid_input("aux: bad box stats");
    }

    AuxParams a;
    a.l = l;
    a.M = m;
    a.stats = stats;
    a.kind = kind;
    if (kind == CodebookKind::GridLattice) {
        auto v = static_cast<uint32_t>(std::ceil(std::sqrt(static_cast<double>(requested_u))));
        while (v * v < requested_u) ++v;
        while (v >= 2 && (v - 1) * (v - 1) >= requested_u) --v;
        a.U = v * v;
    } else {
        a.U = requested_u;
    }
    if ((static_cast<uint64_t>(m) + 1) * a.U > (1ull << 31)) {
        throw invalid_input("aux: (M+1)*U exceeds the 31-bit code range");
    }
    const double step = l / static_cast<double>(a.U);
    a.delta = std::sqrt(step * step + l * l);
    return a;
}

Vec2 codebook_point(const AuxParams& aux, uint32_t theta) {
    const double bmx = aux.stats.centroid.x - aux.l / 2.0;
    const double bmy = aux.stats.centroid.y - aux.l / 2.0;
    if (aux.kind == CodebookKind::GridLattice) {
        const uint32_t v = aux.grid_dim();
        const double cell = aux.l / static_cast<double>(v);
        return Vec2{bmx + (static_cast<double>(theta % v) + 0.5) * cell,
                    bmy + (static_cast<double>(theta / v) + 0.5) * cell};
    }
    // literal trajectory: wrap the scaled direction vector back into the box
    const double step = aux.l / static_cast<double>(aux.U);
    const double ax = step / aux.delta;
    const double ay = aux.l / aux.delta;
    const double t = aux.delta * static_cast<double>(theta);
    return Vec2{bmx + std::fmod(t * ax, aux.l), bmy + std::fmod(t * ay, aux.l)};
}

Codebook build_codebook(const AuxParams& aux) {
    if (aux.U < 2) {
        throw invalid_input("build_codebook: codebook size must be at least 2");
    }
    Codebook cb;
    cb.params = aux;
    cb.points.resize(aux.U);
    for (uint32_t t = 0; t < aux.U; ++t) cb.points[t] = codebook_point(aux, t);
    return cb;
}

bool outliers_possible(const AuxParams& aux) {
    return 2.0 * aux.stats.l_f - aux.l > 0.0;
}

uint32_t valid_code_bound(const AuxParams& aux) {
    return outliers_possible(aux) ? aux.max_code_bound() : aux.U;
}

std::vector<double> category_scales(const AuxParams& aux) {
    std::vector<double> scales(aux.M + 1, std::numeric_limits<double>::quiet_NaN());
    scales[0] = 1.0;
    if (outliers_possible(aux)) {
        for (uint32_t m = 1; m <= aux.M; ++m) {
            scales[m] = scale_factor(m, aux.M, aux.l, aux.stats.l_f);
        }
    }
    return scales;
}

namespace {

// Nearest lattice index by per-axis rounding (half-down so ties go to the
// smaller theta), then an exact 3x3 argmin pass with the same squared-distance
// arithmetic a full scan would use. Keeps O(1) cost while agreeing with the
// brute-force scan bit-for-bit even when a point sits on a cell boundary.
uint32_t lattice_nearest(Vec2 p, const AuxParams& aux) {
    const uint32_t v = aux.grid_dim();
    const double cell = aux.l / static_cast<double>(v);
    const double bmx = aux.stats.centroid.x - aux.l / 2.0;
    const double bmy = aux.stats.centroid.y - aux.l / 2.0;

    const auto axis_index = [&](double coord, double origin) {
        const double t = (coord - origin) / cell - 0.5;
        auto i = static_cast<long>(std::ceil(t - 0.5));
        if (i < 0) i = 0;
        if (i >= static_cast<long>(v)) i = static_cast<long>(v) - 1;
        return i;
    };
    const long ix = axis_index(p.x, bmx);
    const long iy = axis_index(p.y, bmy);

    uint32_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (long dy = -1; dy <= 1; ++dy) {
        const long y = iy + dy;
        if (y < 0 || y >= static_cast<long>(v)) continue;
        for (long dx = -1; dx <= 1; ++dx) {
            const long x = ix + dx;
            if (x < 0 || x >= static_cast<long>(v)) continue;
            const auto theta = static_cast<uint32_t>(y * static_cast<long>(v) + x);
            const Vec2 c = codebook_point(aux, theta);
            const double ddx = p.x - c.x;
            const double ddy = p.y - c.y;
            const double d2 = ddx * ddx + ddy * ddy;
            if (d2 < best_d2) { // candidates visited in ascending theta
                best_d2 = d2;
                best = theta;
            }
        }
    }
    return best;
}

uint32_t scan_nearest(Vec2 p, const std::vector<Vec2>& points) {
    uint32_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < points.size(); ++t) {
        const double dx = p.x - points[t].x;
        const double dy = p.y - points[t].y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<uint32_t>(t);
        }
    }
    return best;
}

} // namespace

uint32_t encode_pair(Vec2 pair, const Codebook& cb) {
    const AuxParams& aux = cb.params;
    const uint32_t m = assign_category(pair, aux.stats, aux.l, aux.M);
    const double s = scale_factor(m, aux.M, aux.l, aux.stats.l_f);
    const Vec2 p = scale_toward_centroid(pair, aux.stats.centroid, s);
    const uint32_t theta = aux.kind == CodebookKind::GridLattice ? lattice_nearest(p, aux)
                                                                 : scan_nearest(p, cb.points);
    return theta + m * aux.U;
}

Vec2 decode_pair(uint32_t code, const AuxParams& aux) {
    if (code >= valid_code_bound(aux)) {
        throw corrupt_data("decode_pair: code " + std::to_string(code) +
                           " out of range (bound " + std::to_string(valid_code_bound(aux)) +
                           ")");
    }
    const uint32_t m = code / aux.U;
    const uint32_t theta = code % aux.U;
    const double s = m == 0 ? 1.0 : scale_factor(m, aux.M, aux.l, aux.stats.l_f);
    return unscale_from_centroid(codebook_point(aux, theta), aux.stats.centroid, s);
}

CodeMatrix encode_tensor(const PairField& pf, const Codebook& cb) {
    CodeMatrix cm;
    cm.rows = pf.rows;
    cm.cols = pf.pairs_per_row();
    cm.max_code_bound = cb.params.max_code_bound();
    cm.codes.resize(cm.rows * cm.cols);

    const std::size_t ppr = cm.cols;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(cm.rows); ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * ppr;
        for (std::size_t j = 0; j < ppr; ++j) {
            cm.codes[base + j] = encode_pair(pf.pair(base + j), cb);
        }
    }
    return cm;
}

Matrix decode_tensor(const CodeMatrix& cm, const AuxParams& aux, std::size_t rows,
                     std::size_t cols) {
    if (rows != cm.rows || (cols + 1) / 2 != cm.cols || cols == 0) {
        throw corrupt_data("decode_tensor: shape does not match code matrix");
    }
    if (cm.max_code_bound != aux.max_code_bound()) {
        throw corrupt_data("decode_tensor: aux does not match code matrix");
    }
    const uint32_t bound = valid_code_bound(aux);
    for (const uint32_t c : cm.codes) {
        if (c >= bound) {
            throw corrupt_data("decode_tensor: code out of range");
        }
    }

    const std::vector<double> scales = category_scales(aux);

    Matrix out(rows, cols);
    const Vec2 ct = aux.stats.centroid;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
        float* dst = out.data.data() + static_cast<std::size_t>(r) * cols;
        const uint32_t* src = cm.codes.data() + static_cast<std::size_t>(r) * cm.cols;
        for (std::size_t j = 0; j < cm.cols; ++j) {
            const uint32_t code = src[j];
            const Vec2 d = unscale_from_centroid(codebook_point(aux, code % aux.U), ct,
                                                 scales[code / aux.U]);
            dst[2 * j] = static_cast<float>(d.x);
            if (2 * j + 1 < cols) {
                dst[2 * j + 1] = static_cast<float>(d.y);
            }
        }
    }
    return out;
}

double mae(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw invalid_input("mae: shape mismatch");
    }
    if (a.size() == 0) return 0.0;

    std::vector<double> partial(a.rows, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(a.rows); ++r) {
        const float* pa = a.data.data() + static_cast<std::size_t>(r) * a.cols;
        const float* pb = b.data.data() + static_cast<std::size_t>(r) * a.cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < a.cols; ++c) {
            acc += std::fabs(static_cast<double>(pa[c]) - static_cast<double>(pb[c]));
        }
        partial[static_cast<std::size_t>(r)] = acc;
    }
    double total = 0.0;
    for (std::size_t r = 0; r < a.rows; ++r) total += partial[r];
    return total / static_cast<double>(a.size());
}

double inner_proportion(const PairField& pf, const BoxStats& stats, double l) {
    if (pf.pair_count() == 0) {
        throw invalid_input("inner_proportion: empty pair field");
    }
    if (!(l > 0.0)) {
        throw invalid_input("inner_proportion: box length must be positive");
    }
    const std::size_t g = pf.pair_count();
    std::size_t inside = 0;
#pragma omp parallel for schedule(static) reduction(+ : inside)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(g); ++i) {
        if (linf_dist(pf.pair(static_cast<std::size_t>(i)), stats.centroid) <= l / 2.0) {
            ++inside;
        }
    }
    return static_cast<double>(inside) / static_cast<double>(g);
}

} // namespace birkhoff
