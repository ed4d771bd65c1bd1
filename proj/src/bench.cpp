#include "birkhoff/bench.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>
#include <omp.h>

#include "birkhoff/bitpack.hpp"
#include "birkhoff/container.hpp"
#include "birkhoff/error.hpp"
#include "birkhoff/safetensors.hpp"
#include "birkhoff/search.hpp"

namespace birkhoff {

namespace {

struct SplitMix64 {
    uint64_t state;
    explicit SplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    // (0, 1]
    double unit() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }
};

double elapsed_ms(std::chrono::steady_clock::time_point t0,
                  std::chrono::steady_clock::time_point t1) {
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double max_rel_err(const Matrix& got, const Matrix& ref) {
    double max_abs = 0.0, max_ref = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        max_abs = std::max(max_abs,
                           std::fabs(static_cast<double>(got.data[i]) - ref.data[i]));
        max_ref = std::max(max_ref, std::fabs(static_cast<double>(ref.data[i])));
    }
    return max_ref > 0.0 ? max_abs / max_ref : max_abs;
}

uint32_t matrix_checksum(const Matrix& m) {
    return crc32(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(m.data.data()),
                                          m.data.size() * sizeof(float)));
}

// One compressed synthetic weight problem shared by all strategies of a shape.
struct Problem {
    Matrix weights;
    Matrix decoded;
    FusedOperand operand;
    uint64_t payload_bytes = 0;
    double mae_value = 0.0;
};

} // namespace

const char* strategy_name(Strategy s) {
    switch (s) {
    case Strategy::Dense: return "dense";
    case Strategy::DecompressThenGemm: return "decompress_then_gemm";
    case Strategy::Fused: return "fused";
    }
    return "?";
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, uint64_t seed) {
    Matrix m(rows, cols);
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < m.size(); i += 2) {
        // Box-Muller; deterministic across platforms unlike std::normal_distribution
        const double u1 = rng.unit();
        const double u2 = rng.unit();
        const double r = std::sqrt(-2.0 * std::log(u1)) * stddev;
        const double phi = 2.0 * 3.14159265358979323846 * u2;
        m.data[i] = static_cast<float>(r * std::cos(phi));
        if (i + 1 < m.size()) m.data[i + 1] = static_cast<float>(r * std::sin(phi));
    }
    return m;
}

std::string machine_descriptor() {
    std::ostringstream os;
#if defined(__linux__)
    os << "linux";
#elif defined(__APPLE__)
    os << "darwin";
#else
    os << "unknown-os";
#endif
#if defined(__x86_64__)
    os << " x86_64";
#elif defined(__aarch64__)
    os << " aarch64";
#endif
#if defined(__GNUC__) && !defined(__clang__)
    os << ", gcc " << __GNUC__ << "." << __GNUC_MINOR__;
#elif defined(__clang__)
    os << ", clang " << __clang_major__ << "." << __clang_minor__;
#endif
    os << ", " << std::thread::hardware_concurrency() << " hw threads";
    return os.str();
}

BenchReport run_suite(std::span<const BenchCase> cases, const BenchOptions& options) {
    BenchReport report;
    report.machine = machine_descriptor();
    report.workers = options.workers > 0 ? options.workers : omp_get_max_threads();
    if (options.workers > 0) {
        omp_set_num_threads(options.workers);
    }

    // one job per (case, weight source); checkpoint cases expand per tensor.
    // weights materialize lazily, only when the source is compressed
    struct Job {
        const BenchCase* bc = nullptr;
        std::string label;
        std::string source; // cache key for the compressed weights
        std::size_t k = 0, n = 0;
        std::function<Matrix()> make_weights;
    };
    std::vector<Job> jobs;
    std::map<std::string, TensorMap> files;
    for (const BenchCase& bc : cases) {
        if (bc.repeats < 3) {
            throw invalid_input("bench: repeats must be at least 3");
        }
        if (bc.m == 0) {
            throw invalid_input("bench: activation row count must be positive");
        }
        if (bc.checkpoint.empty()) {
            if (bc.k == 0 || bc.n == 0) {
                throw invalid_input("bench: case shape must be positive");
            }
            Job job;
            job.bc = &bc;
            job.label = bc.label;
            job.source = "g:" + std::to_string(bc.k) + ":" + std::to_string(bc.n) + ":" +
                         std::to_string(bc.seed);
            job.k = bc.k;
            job.n = bc.n;
            job.make_weights = [&bc, &options] {
                return gaussian_matrix(bc.k, bc.n, options.weight_std, bc.seed);
            };
            jobs.push_back(std::move(job));
            continue;
        }
        auto fit = files.find(bc.checkpoint);
        if (fit == files.end()) {
            fit = files.emplace(bc.checkpoint, ingest_safetensors(bc.checkpoint)).first;
        }
        const EligibilityPolicy policy;
        bool any = false;
        for (const auto& [name, t] : fit->second) {
            if (eligibility(name, t, policy) != EntryKind::Compressed) continue;
            Job job;
            job.bc = &bc;
            job.label = bc.label.empty() ? name : bc.label + ":" + name;
            job.source = "f:" + bc.checkpoint + ":" + name;
            job.k = static_cast<std::size_t>(t.shape[0]);
            job.n = static_cast<std::size_t>(t.shape[1]);
            const StTensor* tensor = &t;
            job.make_weights = [tensor] { return tensor_to_matrix(*tensor); };
            jobs.push_back(std::move(job));
            any = true;
        }
        if (!any) {
            throw invalid_input("bench: no eligible tensors in " + bc.checkpoint);
        }
    }

    std::map<std::string, Problem> problems;
    std::map<std::string, Matrix> references;
    std::map<std::tuple<std::size_t, std::size_t, uint64_t>, Matrix> activations;

    uint64_t original_total = 0;
    uint64_t stored_total = 0;

    for (Job& job : jobs) {
        const BenchCase& bc = *job.bc;
        auto pit = problems.find(job.source);
        if (pit == problems.end()) {
            Problem p;
            p.weights = job.make_weights();
            const auto c0 = std::chrono::steady_clock::now();
            const PairField pf = pair_split(p.weights);
            const AuxParams aux = AuxParams::make(options.l, options.u, options.m_categories,
                                                  compute_stats(pf));
            const Codebook cb = build_codebook(aux);
            CodeMatrix codes = encode_tensor(pf, cb);
            const uint32_t bits = bits_for_bound(aux.max_code_bound());
            p.payload_bytes = pack_codes(codes.codes, bits).bytes.size();
            report.compression_ms += elapsed_ms(c0, std::chrono::steady_clock::now());
            p.decoded = decode_tensor(codes, aux, job.k, job.n);
            p.mae_value = mae(p.weights, p.decoded);
            p.operand = FusedOperand{std::move(codes), aux, job.k, job.n};

            original_total += p.weights.size() * sizeof(float);
            stored_total += p.payload_bytes + 128; // constant sidecar allowance
            report.mae = std::max(report.mae, p.mae_value);
            pit = problems.emplace(job.source, std::move(p)).first;
        }
        const Problem& prob = pit->second;

        const auto akey = std::make_tuple(bc.m, job.k, bc.seed);
        auto ait = activations.find(akey);
        if (ait == activations.end()) {
            ait = activations
                      .emplace(akey, gaussian_matrix(bc.m, job.k, 1.0, bc.seed ^ 0x5A5A5A5Aull))
                      .first;
        }
        const Matrix& act = ait->second;

        const std::string rkey = job.source + ":" + std::to_string(bc.m);
        auto rit = references.find(rkey);
        if (rit == references.end()) {
            rit = references.emplace(rkey, gemm_naive(act, prob.decoded)).first;
        }
        const Matrix& ref = rit->second;

        const auto compute = [&]() -> Matrix {
            switch (bc.strategy) {
            case Strategy::Dense:
                return gemm_blocked(act, prob.decoded, options.cfg, options.workers);
            case Strategy::DecompressThenGemm: {
                const Matrix w =
                    decode_tensor(prob.operand.codes, prob.operand.aux, job.k, job.n);
                return gemm_blocked(act, w, options.cfg, options.workers);
            }
            case Strategy::Fused:
            default:
                return fused_gemm(act, prob.operand, options.cfg, options.workers);
            }
        };

        CaseResult res;
        res.label = job.label;
        res.strategy = bc.strategy;
        res.m = bc.m;
        res.k = job.k;
        res.n = job.n;
        res.workers = report.workers;

        // gate precedes stopwatch: no timings for wrong outputs
        const Matrix first = compute();
        res.correct = max_rel_err(first, ref) <= 1e-5;
        res.checksum = matrix_checksum(first);
        if (res.correct) {
            std::vector<double> times;
            times.reserve(static_cast<std::size_t>(bc.repeats));
            (void)compute(); // warm-up, discarded
            for (int i = 0; i < bc.repeats; ++i) {
                const auto t0 = std::chrono::steady_clock::now();
                const Matrix out = compute();
                const auto t1 = std::chrono::steady_clock::now();
                times.push_back(elapsed_ms(t0, t1));
            }
            res.median_ms = median(times);
            res.min_ms = *std::min_element(times.begin(), times.end());
        }
        report.cases.push_back(std::move(res));
    }

    report.compression_ratio =
        stored_total > 0 ? static_cast<double>(original_total) / static_cast<double>(stored_total)
                         : 0.0;
    return report;
}

std::string report_csv(const BenchReport& report) {
    std::ostringstream os;
    os << "label,strategy,m,k,n,median_ms,min_ms,workers,checksum\n";
    for (const CaseResult& c : report.cases) {
        os << c.label << ',' << strategy_name(c.strategy) << ',' << c.m << ',' << c.k << ','
           << c.n << ',' << c.median_ms << ',' << c.min_ms << ',' << c.workers << ','
           << c.checksum << '\n';
    }
    return os.str();
}

std::string report_json(const BenchReport& report) {
    nlohmann::json j;
    j["machine"] = report.machine;
    j["workers"] = report.workers;
    j["compression_ratio"] = report.compression_ratio;
    j["compression_ms"] = report.compression_ms;
    j["mae"] = report.mae;
    j["cases"] = nlohmann::json::array();
    for (const CaseResult& c : report.cases) {
        j["cases"].push_back({{"label", c.label},
                              {"strategy", strategy_name(c.strategy)},
                              {"m", c.m},
                              {"k", c.k},
                              {"n", c.n},
                              {"median_ms", c.median_ms},
                              {"min_ms", c.min_ms},
                              {"workers", c.workers},
                              {"checksum", c.checksum},
                              {"correct", c.correct}});
    }
    return j.dump(2);
}

} // namespace birkhoff
