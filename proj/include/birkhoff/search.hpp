#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "birkhoff/codec.hpp"

namespace birkhoff {

struct SearchSpace {
    std::vector<double> l_candidates;
    std::vector<uint32_t> u_candidates;
    std::vector<uint32_t> m_candidates;
};

struct SearchResult {
    CodeMatrix codes;
    AuxParams aux;
    double achieved_mae = 0.0;
    std::size_t candidates_tried = 0;
};

// Nonempty candidate lists with values the codec accepts.
void validate_search_space(const SearchSpace& space);

// Evaluates every (M, U, l) triple, encode -> decode -> MAE, and returns the
// minimum. Equal-MAE ties prefer smaller U, then smaller M, then larger l.
SearchResult grid_search(const Matrix& w, const SearchSpace& space);

// Reconstruction MAE of a single candidate; pure, no state retained.
double evaluate_candidate(const Matrix& w, const AuxParams& aux);

// ---- preset registry -------------------------------------------------------

struct Preset {
    std::string name;
    SearchSpace space;
};

// Built-in per-model presets; names are lowercase (e.g. "sam-b").
const std::vector<Preset>& builtin_presets();
const SearchSpace* find_builtin_preset(std::string_view name);

// Plain-text preset files, one preset per line:
//   # comment
//   sam-b  l=0.1  U=1600  M=1,2,3
std::vector<Preset> parse_presets(std::istream& in);
std::vector<Preset> load_preset_file(const std::string& path);

} // namespace birkhoff
