#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "birkhoff/container.hpp"
#include "birkhoff/search.hpp"

namespace birkhoff::cli {

enum class Command : uint8_t { Compress, Decompress, Verify, Inspect, Bench };
enum class ReportFormat : uint8_t { Text, Json, Csv };

struct RunConfig {
    Command command = Command::Compress;
    std::string input;
    std::string output;
    std::string container_path; // verify: the .bhc to check against input

    // search space selection: explicit lists override the preset
    std::string preset;
    std::string preset_file;
    std::vector<double> l_list;
    std::vector<uint32_t> u_list;
    std::vector<uint32_t> m_list;

    EligibilityPolicy policy;
    double mae_budget = -1.0; // < 0 means no budget
    int workers = 0;          // 0 = all hardware threads
    ReportFormat format = ReportFormat::Text;
    uint64_t seed = 42;

    // bench
    std::size_t bench_m = 1024, bench_k = 1024, bench_n = 1024;
    std::string bench_checkpoint; // overrides (k, n): bench every eligible tensor
    int bench_repeats = 5;
    double bench_l = 0.1;
    uint32_t bench_u = 1600;
    uint32_t bench_m_categories = 3;
    double bench_std = 0.02;
    std::size_t block_rows = 64, block_cols = 64, block_depth = 64;
};

// Exit codes: 0 success, 1 validation or budget failure, 2 I/O or corruption.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

SearchSpace resolve_space(const RunConfig& cfg);

int cmd_compress(const RunConfig& cfg);
int cmd_decompress(const RunConfig& cfg);
int cmd_verify(const RunConfig& cfg);
int cmd_inspect(const RunConfig& cfg);
int cmd_bench(const RunConfig& cfg);

} // namespace birkhoff::cli
