#include "birkhoff/search.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "birkhoff/error.hpp"

namespace birkhoff {

namespace {

// Streaming encode -> decode -> |diff| per pair so candidate evaluation never
// materializes the reconstructed matrix. Accumulation order matches mae() on
// the decoded tensor exactly (left-to-right per row, rows reduced in order),
// so the reported value is bit-identical to an independent recomputation.
double eval_mae(const PairField& pf, const Codebook& cb) {
    const AuxParams& aux = cb.params;
    const std::vector<double> scales = category_scales(aux);
    const Vec2 ct = aux.stats.centroid;
    const std::size_t ppr = pf.pairs_per_row();

    std::vector<double> partial(pf.rows, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(pf.rows); ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * ppr;
        double acc = 0.0;
        for (std::size_t j = 0; j < ppr; ++j) {
            const Vec2 w = pf.pair(base + j);
            const uint32_t code = encode_pair(w, cb);
            const Vec2 d = unscale_from_centroid(codebook_point(aux, code % aux.U), ct,
                                                 scales[code / aux.U]);
            acc += std::fabs(w.x - static_cast<double>(static_cast<float>(d.x)));
            if (2 * j + 1 < pf.orig_cols) {
                acc += std::fabs(w.y - static_cast<double>(static_cast<float>(d.y)));
            }
        }
        partial[static_cast<std::size_t>(r)] = acc;
    }
    double total = 0.0;
    for (std::size_t r = 0; r < pf.rows; ++r) total += partial[r];
    return total / static_cast<double>(pf.rows * pf.orig_cols);
}

// Equal MAE prefers fewer bits (smaller effective U), then smaller M, then larger l.
bool better_candidate(double mae_a, const AuxParams& a, double mae_b, const AuxParams& b) {
    if (mae_a != mae_b) return mae_a < mae_b;
    if (a.U != b.U) return a.U < b.U;
    if (a.M != b.M) return a.M < b.M;
    return a.l > b.l;
}

} // namespace

void validate_search_space(const SearchSpace& space) {
    if (space.l_candidates.empty() || space.u_candidates.empty() || space.m_candidates.empty()) {
        throw invalid_input("grid_search: all candidate lists must be nonempty");
    }
    for (const double l : space.l_candidates) {
        if (!(l > 0.0) || !std::isfinite(l)) {
            throw invalid_input("grid_search: box lengths must be positive and finite");
        }
    }
    for (const uint32_t u : space.u_candidates) {
        if (u < 2) throw invalid_input("grid_search: codebook sizes must be at least 2");
    }
    for (const uint32_t m : space.m_candidates) {
        if (m < 1) throw invalid_input("grid_search: category counts must be at least 1");
    }
}

SearchResult grid_search(const Matrix& w, const SearchSpace& space) {
    validate_search_space(space);
    const PairField pf = pair_split(w);
    const BoxStats stats = compute_stats(pf);

    bool found = false;
    AuxParams best_aux;
    double best_mae = std::numeric_limits<double>::infinity();
    std::size_t tried = 0;

    for (const uint32_t m : space.m_candidates) {
        for (const uint32_t u : space.u_candidates) {
            for (const double l : space.l_candidates) {
                ++tried;
                try {
                    const AuxParams aux = AuxParams::make(l, u, m, stats);
                    const Codebook cb = build_codebook(aux);
                    const double cur = eval_mae(pf, cb);
                    if (!found || better_candidate(cur, aux, best_mae, best_aux)) {
                        found = true;
                        best_mae = cur;
                        best_aux = aux;
                    }
                } catch (const invalid_input&) {
                    // candidate failure: skipped, the others still compete
                }
            }
        }
    }
    if (!found) {
        throw invalid_input("grid_search: all candidates failed");
    }

    SearchResult result;
    result.aux = best_aux;
    result.achieved_mae = best_mae;
    result.candidates_tried = tried;
    result.codes = encode_tensor(pf, build_codebook(best_aux));
    return result;
}

double evaluate_candidate(const Matrix& w, const AuxParams& aux) {
    const PairField pf = pair_split(w);
    return eval_mae(pf, build_codebook(aux));
}

// ---- preset registry -------------------------------------------------------

namespace {

SearchSpace make_space(std::vector<double> ls, std::vector<uint32_t> us,
                       std::vector<uint32_t> ms) {
    return SearchSpace{std::move(ls), std::move(us), std::move(ms)};
}

std::vector<Preset> make_builtin_presets() {
    const std::vector<uint32_t> m123{1, 2, 3};
    const std::vector<uint32_t> u_small{1225, 1600};
    const std::vector<uint32_t> u_wide{1600, 2500, 3600, 6400, 8100, 10000, 22500, 40000};

    std::vector<Preset> p;
    p.push_back({"sam-b", make_space({0.1}, {1600}, m123)});
    p.push_back({"sam-l", make_space({0.1}, u_small, m123)});
    p.push_back({"sam-h", make_space({0.1}, u_small, m123)});
    p.push_back({"sam-hq-tiny", make_space({0.1}, u_wide, m123)});
    p.push_back({"sam-hq-b", make_space({0.1}, u_small, m123)});
    p.push_back({"sam-hq-l", make_space({0.1}, u_small, m123)});
    p.push_back({"sam-hq-h", make_space({0.1}, u_small, m123)});
    p.push_back({"sam2-tiny", make_space({0.1}, {1600, 2500, 3600, 6400, 8100, 10000}, m123)});
    p.push_back({"sam2-s", make_space({0.1}, u_wide, m123)});
    p.push_back(
        {"sam2-b", make_space({0.1}, {1600, 2500, 3600, 6400, 8100, 10000, 22500}, m123)});
    p.push_back({"sam2-l", make_space({0.1}, u_wide, m123)});
    p.push_back({"mobilesam", make_space({0.1}, u_wide, m123)});
    p.push_back({"mobilesamv2", make_space({0.1}, u_small, m123)});
    p.push_back({"edgesam", make_space({0.1}, u_wide, m123)});
    p.push_back({"edgesam-rpn", make_space({0.1}, u_wide, m123)});
    p.push_back({"efficientsam-ti", make_space({0.1}, u_small, m123)});
    p.push_back({"efficientsam-s", make_space({0.1}, u_small, m123)});
    p.push_back({"tinysam", make_space({0.1}, u_wide, m123)});
    return p;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (const char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

const std::vector<Preset>& builtin_presets() {
    static const std::vector<Preset> presets = make_builtin_presets();
    return presets;
}

const SearchSpace* find_builtin_preset(std::string_view name) {
    for (const Preset& p : builtin_presets()) {
        if (p.name == name) return &p.space;
    }
    return nullptr;
}

std::vector<Preset> parse_presets(std::istream& in) {
    std::vector<Preset> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string name;
        if (!(ls >> name) || name[0] == '#') continue;

        Preset preset;
        preset.name = name;
        std::string tok;
        while (ls >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) {
                throw invalid_input("preset file line " + std::to_string(lineno) +
                                    ": expected key=v1,v2,... got '" + tok + "'");
            }
            const std::string key = tok.substr(0, eq);
            try {
                for (const std::string& item : split(tok.substr(eq + 1), ',')) {
                    if (key == "l") {
                        preset.space.l_candidates.push_back(std::stod(item));
                    } else if (key == "U") {
                        preset.space.u_candidates.push_back(
                            static_cast<uint32_t>(std::stoul(item)));
                    } else if (key == "M") {
                        preset.space.m_candidates.push_back(
                            static_cast<uint32_t>(std::stoul(item)));
                    } else {
                        throw invalid_input("preset file line " + std::to_string(lineno) +
                                            ": unknown key '" + key + "'");
                    }
                }
            } catch (const std::logic_error&) {
                throw invalid_input("preset file line " + std::to_string(lineno) +
                                    ": bad number in '" + tok + "'");
            }
        }
        if (preset.space.l_candidates.empty() || preset.space.u_candidates.empty() ||
            preset.space.m_candidates.empty()) {
            throw invalid_input("preset file line " + std::to_string(lineno) +
                                ": preset '" + name + "' must set l, U and M");
        }
        out.push_back(std::move(preset));
    }
    return out;
}

std::vector<Preset> load_preset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open preset file: " + path);
    }
    return parse_presets(in);
}

} // namespace birkhoff
