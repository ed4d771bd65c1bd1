#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "birkhoff/hyperlinear.hpp"

namespace birkhoff {

enum class Strategy : uint8_t { Dense, DecompressThenGemm, Fused };

const char* strategy_name(Strategy s);

struct BenchCase {
    std::string label;
    std::size_t m = 0, k = 0, n = 0; // synthetic weight shape (k x n)
    std::string checkpoint;          // alternatively: bench every eligible tensor of a file
    Strategy strategy = Strategy::Fused;
    int repeats = 5; // at least 3; one extra warm-up run is discarded
    uint64_t seed = 42;
};

struct CaseResult {
    std::string label;
    Strategy strategy = Strategy::Fused;
    std::size_t m = 0, k = 0, n = 0;
    double median_ms = 0.0;
    double min_ms = 0.0;
    int workers = 0;
    uint32_t checksum = 0; // crc over the output matrix bytes
    bool correct = false;  // cross-check gate; timings are zero when false
};

struct BenchOptions {
    int workers = 0; // 0 = all hardware threads
    BlockConfig cfg;
    double l = 0.1;
    uint32_t u = 1600;
    uint32_t m_categories = 3;
    double weight_std = 0.02; // synthetic Gaussian weights
};

struct BenchReport {
    std::vector<CaseResult> cases;
    double compression_ratio = 0.0; // across all benchmark weights
    double compression_ms = 0.0;    // wall time spent compressing them
    double mae = 0.0;               // worst per-weight reconstruction MAE
    std::string machine;
    int workers = 0;
};

// Deterministic Gaussian fill (mean 0), same bytes for a given seed everywhere.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, uint64_t seed);

// Runs every case: builds the weights (synthetic, or each eligible tensor of a
// checkpoint), compresses them, gates all strategies against the serial naive
// reference, then times. Cases sharing a weight source reuse one compression.
BenchReport run_suite(std::span<const BenchCase> cases, const BenchOptions& options);

std::string report_csv(const BenchReport& report);
std::string report_json(const BenchReport& report);
std::string machine_descriptor();

} // namespace birkhoff
