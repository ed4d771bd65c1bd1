#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "birkhoff/error.hpp"
#include "birkhoff/search.hpp"
#include "test_oracles.hpp"

using namespace birkhoff;

namespace {

Matrix random_weights(std::size_t rows, std::size_t cols, uint64_t seed, double spread = 0.08) {
    oracle::Rng rng(seed);
    Matrix w(rows, cols);
    for (float& v : w.data) v = static_cast<float>(rng.uniform(-spread, spread));
    return w;
}

// Matrix filled with one constant: every pair sits on the centroid, so any
// codebook with a point on the box center reconstructs it exactly.
Matrix constant_weights(std::size_t rows, std::size_t cols, float value) {
    Matrix w(rows, cols);
    for (float& v : w.data) v = value;
    return w;
}

} // namespace

TEST_CASE("singleton grid equals a direct encode") {
    const Matrix w = random_weights(16, 16, 5);
    const SearchSpace space{{0.1}, {64}, {2}};
    const SearchResult sr = grid_search(w, space);
    CHECK(sr.candidates_tried == 1);

    const PairField pf = pair_split(w);
    const AuxParams aux = AuxParams::make(0.1, 64, 2, compute_stats(pf));
    const CodeMatrix direct = encode_tensor(pf, build_codebook(aux));
    CHECK(sr.codes.codes == direct.codes);
    CHECK(sr.aux.U == aux.U);
    CHECK(sr.achieved_mae == evaluate_candidate(w, aux));
}

TEST_CASE("achieved mae equals an independent recomputation exactly") {
    const Matrix w = random_weights(9, 13, 7);
    const SearchSpace space{{0.05, 0.1}, {64, 100}, {1, 2}};
    const SearchResult sr = grid_search(w, space);
    CHECK(sr.candidates_tried == 8);
    const Matrix back = decode_tensor(sr.codes, sr.aux, w.rows, w.cols);
    CHECK(sr.achieved_mae == mae(w, back));
}

TEST_CASE("evaluate_candidate matches a from-scratch reimplementation") {
    const Matrix w = random_weights(16, 16, 11);
    const PairField pf = pair_split(w);
    const BoxStats st = compute_stats(pf);
    const AuxParams aux = AuxParams::make(0.1, 81, 2, st);
    const Codebook cb = build_codebook(aux);

    double total = 0.0;
    for (std::size_t r = 0; r < pf.rows; ++r) {
        for (std::size_t j = 0; j < pf.pairs_per_row(); ++j) {
            const Vec2 p = pf.pair(r * pf.pairs_per_row() + j);
            const Vec2 d = oracle::decode(oracle::encode(p, aux, cb.points), aux, cb.points);
            total += std::fabs(p.x - static_cast<double>(static_cast<float>(d.x)));
            if (2 * j + 1 < pf.orig_cols) {
                total += std::fabs(p.y - static_cast<double>(static_cast<float>(d.y)));
            }
        }
    }
    const double independent = total / static_cast<double>(w.size());
    CHECK(evaluate_candidate(w, aux) == doctest::Approx(independent).epsilon(1e-12));

    // determinism: same inputs, same value
    CHECK(evaluate_candidate(w, aux) == evaluate_candidate(w, aux));
}

TEST_CASE("supersets never increase the achieved mae") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix w = random_weights(12, 18, 100 + seed);
        const SearchSpace small{{0.1}, {64}, {2}};
        const SearchSpace medium{{0.1, 0.05}, {64, 144}, {2}};
        const SearchSpace large{{0.1, 0.05, 0.2}, {64, 144, 256}, {2, 3}};
        const double m1 = grid_search(w, small).achieved_mae;
        const double m2 = grid_search(w, medium).achieved_mae;
        const double m3 = grid_search(w, large).achieved_mae;
        CHECK(m2 <= m1);
        CHECK(m3 <= m2);
    }
}

TEST_CASE("equal mae ties prefer smaller U, then smaller M, then larger l") {
    // constant tensor: odd lattice dims reconstruct exactly (center point),
    // so U=9 and U=25 both hit mae 0 -> the smaller codebook wins
    const Matrix w = constant_weights(8, 8, 0.25f);
    {
        const SearchResult sr = grid_search(w, SearchSpace{{0.1}, {25, 9}, {1}});
        CHECK(sr.achieved_mae == 0.0);
        CHECK(sr.aux.U == 9);
    }
    {
        const SearchResult sr = grid_search(w, SearchSpace{{0.1}, {9}, {3, 1}});
        CHECK(sr.achieved_mae == 0.0);
        CHECK(sr.aux.M == 1);
    }
    {
        const SearchResult sr = grid_search(w, SearchSpace{{0.05, 0.2}, {9}, {1}});
        CHECK(sr.achieved_mae == 0.0);
        CHECK(sr.aux.l == 0.2);
    }
}

TEST_CASE("search is deterministic") {
    const Matrix w = random_weights(20, 20, 999);
    const SearchSpace space{{0.05, 0.1}, {49, 100}, {1, 3}};
    const SearchResult a = grid_search(w, space);
    const SearchResult b = grid_search(w, space);
    CHECK(a.codes.codes == b.codes.codes);
    CHECK(a.achieved_mae == b.achieved_mae);
    CHECK(a.aux.U == b.aux.U);
}

TEST_CASE("invalid spaces are rejected") {
    const Matrix w = random_weights(4, 4, 1);
    CHECK_THROWS_AS(grid_search(w, SearchSpace{{}, {64}, {1}}), invalid_input);
    CHECK_THROWS_AS(grid_search(w, SearchSpace{{0.1}, {}, {1}}), invalid_input);
    CHECK_THROWS_AS(grid_search(w, SearchSpace{{0.1}, {64}, {}}), invalid_input);
    CHECK_THROWS_AS(grid_search(w, SearchSpace{{-0.1}, {64}, {1}}), invalid_input);
    CHECK_THROWS_AS(grid_search(w, SearchSpace{{0.1}, {1}, {1}}), invalid_input);
    CHECK_THROWS_AS(grid_search(w, SearchSpace{{0.1}, {64}, {0}}), invalid_input);
}

TEST_CASE("builtin preset registry covers all eighteen models") {
    const auto& presets = builtin_presets();
    CHECK(presets.size() == 18);
    std::set<std::string> names;
    for (const Preset& p : presets) names.insert(p.name);
    CHECK(names.size() == 18);

    const SearchSpace* samb = find_builtin_preset("sam-b");
    REQUIRE(samb != nullptr);
    CHECK(samb->l_candidates == std::vector<double>{0.1});
    CHECK(samb->u_candidates == std::vector<uint32_t>{1600});
    CHECK(samb->m_candidates == std::vector<uint32_t>{1, 2, 3});

    const SearchSpace* hqt = find_builtin_preset("sam-hq-tiny");
    REQUIRE(hqt != nullptr);
    CHECK(hqt->u_candidates ==
          std::vector<uint32_t>{1600, 2500, 3600, 6400, 8100, 10000, 22500, 40000});

    CHECK(find_builtin_preset("no-such-model") == nullptr);
}

TEST_CASE("preset files parse") {
    std::istringstream in(R"(# comment line
my-model  l=0.1,0.05  U=1600,2500  M=1,2,3
tiny l=0.2 U=64 M=1
)");
    const auto presets = parse_presets(in);
    REQUIRE(presets.size() == 2);
    CHECK(presets[0].name == "my-model");
    CHECK(presets[0].space.l_candidates == std::vector<double>{0.1, 0.05});
    CHECK(presets[0].space.u_candidates == std::vector<uint32_t>{1600, 2500});
    CHECK(presets[1].space.m_candidates == std::vector<uint32_t>{1});
}

TEST_CASE("preset file errors are reported with line numbers") {
    std::istringstream bad_key("x l=0.1 U=64 Q=3\n");
    CHECK_THROWS_AS(parse_presets(bad_key), invalid_input);
    std::istringstream bad_num("x l=abc U=64 M=1\n");
    CHECK_THROWS_AS(parse_presets(bad_num), invalid_input);
    std::istringstream missing("x l=0.1\n");
    CHECK_THROWS_AS(parse_presets(missing), invalid_input);
    CHECK_THROWS_AS(load_preset_file("/no/such/file"), io_error);
}
