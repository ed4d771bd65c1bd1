#include "birkhoff/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "birkhoff/bench.hpp"
#include "birkhoff/bitpack.hpp"
#include "birkhoff/error.hpp"
#include "birkhoff/hyperlinear.hpp"

namespace birkhoff::cli {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string shape_string(const std::vector<uint64_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

struct TensorRow {
    std::string name;
    std::string kind;
    std::vector<uint64_t> shape;
    std::string dtype;
    uint64_t elements = 0;
    double mae = 0.0;
    double bits_per_param = 0.0;
    double ratio = 0.0; // original bytes / payload bytes for this tensor
    double max_abs = 0.0;
    double ms = 0.0;
    std::string note;
};

void print_rows_text(std::ostream& os, const std::vector<TensorRow>& rows) {
    for (const TensorRow& r : rows) {
        os << "  " << r.name << "  " << shape_string(r.shape) << " " << r.dtype << "  "
           << r.kind;
        if (r.kind == "compressed") {
            os << "  mae=" << r.mae << "  bits/param=" << r.bits_per_param
               << "  ratio=" << r.ratio;
        }
        if (r.ms > 0.0) os << "  time=" << r.ms << "ms";
        if (!r.note.empty()) os << "  (" << r.note << ")";
        os << '\n';
    }
}

json rows_json(const std::vector<TensorRow>& rows) {
    json arr = json::array();
    for (const TensorRow& r : rows) {
        arr.push_back({{"name", r.name},
                       {"kind", r.kind},
                       {"shape", r.shape},
                       {"dtype", r.dtype},
                       {"elements", r.elements},
                       {"mae", r.mae},
                       {"bits_per_param", r.bits_per_param},
                       {"ratio", r.ratio},
                       {"max_abs", r.max_abs},
                       {"ms", r.ms},
                       {"note", r.note}});
    }
    return arr;
}

void print_rows_csv(std::ostream& os, const std::vector<TensorRow>& rows) {
    os << "name,kind,shape,dtype,elements,mae,bits_per_param,ratio,ms\n";
    for (const TensorRow& r : rows) {
        std::string shape = shape_string(r.shape);
        std::replace(shape.begin(), shape.end(), ',', 'x');
        os << r.name << ',' << r.kind << ',' << shape << ',' << r.dtype << ',' << r.elements
           << ',' << r.mae << ',' << r.bits_per_param << ',' << r.ratio << ',' << r.ms << '\n';
    }
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const io_error*>(&e) != nullptr ||
        dynamic_cast<const corrupt_data*>(&e) != nullptr) {
        return 2;
    }
    return 1;
}

} // namespace

SearchSpace resolve_space(const RunConfig& cfg) {
    // start from the preset (default sam-b), explicit lists override per axis
    SearchSpace space;
    std::string preset_name = cfg.preset.empty() ? "sam-b" : cfg.preset;

    std::vector<Preset> file_presets;
    if (!cfg.preset_file.empty()) {
        file_presets = load_preset_file(cfg.preset_file);
    }
    const SearchSpace* found = nullptr;
    for (const Preset& p : file_presets) {
        if (p.name == preset_name) found = &p.space;
    }
    if (found == nullptr) found = find_builtin_preset(preset_name);
    if (found == nullptr) {
        std::ostringstream os;
        os << "unknown preset '" << preset_name << "'; available:";
        for (const Preset& p : builtin_presets()) os << ' ' << p.name;
        for (const Preset& p : file_presets) os << ' ' << p.name;
        throw invalid_input(os.str());
    }
    space = *found;

    if (!cfg.l_list.empty()) space.l_candidates = cfg.l_list;
    if (!cfg.u_list.empty()) space.u_candidates = cfg.u_list;
    if (!cfg.m_list.empty()) space.m_candidates = cfg.m_list;
    return space;
}

int cmd_compress(const RunConfig& cfg) {
    const double t_start = now_ms();
    const SearchSpace space = resolve_space(cfg);
    validate_search_space(space); // reject bad flags before touching any tensor
    const TensorMap tensors = ingest_safetensors(cfg.input);

    std::vector<std::string> names;
    names.reserve(tensors.size());
    for (const auto& [name, t] : tensors) names.push_back(name);

    std::vector<TensorEntry> entries(names.size());
    std::vector<TensorRow> rows(names.size());

    // per-tensor worker pool; with a single tensor the region stays inactive so
    // the row-level parallelism inside the search takes over instead
#pragma omp parallel for schedule(dynamic) if (names.size() > 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(names.size()); ++i) {
        const std::string& name = names[static_cast<std::size_t>(i)];
        const StTensor& t = tensors.at(name);
        TensorEntry& e = entries[static_cast<std::size_t>(i)];
        TensorRow& row = rows[static_cast<std::size_t>(i)];

        e.name = name;
        e.shape = t.shape;
        e.dtype = t.dtype;
        e.original_bytes = t.data.size();
        row.name = name;
        row.shape = t.shape;
        row.dtype = t.dtype;
        row.elements = t.numel();

        EntryKind kind = eligibility(name, t, cfg.policy);
        if (kind == EntryKind::Compressed) {
            const double t0 = now_ms();
            try {
                const Matrix w = tensor_to_matrix(t);
                const SearchResult sr = grid_search(w, space);
                e.kind = EntryKind::Compressed;
                e.pad_applied = w.cols % 2 != 0;
                e.aux = sr.aux;
                e.mae = sr.achieved_mae;
                e.payload = pack_codes(sr.codes.codes, bits_for_bound(sr.aux.max_code_bound()));
                row.kind = "compressed";
                row.mae = sr.achieved_mae;
                row.bits_per_param =
                    static_cast<double>(e.payload.code_count * e.payload.bit_width) /
                    static_cast<double>(t.numel());
                row.ratio = static_cast<double>(e.original_bytes) /
                            static_cast<double>(e.payload.bytes.size());
                row.ms = now_ms() - t0;
            } catch (const std::exception& ex) {
                kind = EntryKind::PassThrough;
                row.note = std::string("compression failed, stored pass-through: ") + ex.what();
            }
        }
        if (kind == EntryKind::PassThrough) {
            e.kind = EntryKind::PassThrough;
            e.raw = t.data;
            e.payload = PackedPayload{};
            e.aux = AuxParams{};
            row.kind = "passthrough";
        }
    }

    write_container(entries, cfg.output);
    const uint64_t stored = std::filesystem::file_size(cfg.output);
    uint64_t original = 0;
    for (const TensorEntry& e : entries) original += e.original_bytes;
    const double ratio =
        stored > 0 ? static_cast<double>(original) / static_cast<double>(stored) : 0.0;
    const double total_ms = now_ms() - t_start;

    bool budget_ok = true;
    for (const TensorRow& r : rows) {
        if (cfg.mae_budget >= 0.0 && r.kind == "compressed" && r.mae > cfg.mae_budget) {
            budget_ok = false;
        }
        if (!r.note.empty()) std::cerr << "warning: " << r.name << ": " << r.note << '\n';
    }

    if (cfg.format == ReportFormat::Json) {
        json j;
        j["command"] = "compress";
        j["input"] = cfg.input;
        j["output"] = cfg.output;
        j["tensors"] = rows_json(rows);
        j["totals"] = {{"original_bytes", original},
                       {"stored_bytes", stored},
                       {"ratio", ratio},
                       {"total_ms", total_ms}};
        j["budget_ok"] = budget_ok;
        std::cout << j.dump(2) << '\n';
    } else if (cfg.format == ReportFormat::Csv) {
        print_rows_csv(std::cout, rows);
        std::cout << "# totals,original_bytes=" << original << ",stored_bytes=" << stored
                  << ",ratio=" << ratio << ",total_ms=" << total_ms << '\n';
    } else {
        std::cout << "compressed " << cfg.input << " -> " << cfg.output << '\n';
        print_rows_text(std::cout, rows);
        std::cout << "totals: original=" << original << " B, stored=" << stored
                  << " B, ratio=" << ratio << "x, time=" << total_ms << " ms\n";
    }

    if (!budget_ok) {
        std::cerr << "error: MAE budget " << cfg.mae_budget << " exceeded\n";
        return 1;
    }
    return 0;
}

int cmd_decompress(const RunConfig& cfg) {
    const Container c = read_container(cfg.input);
    TensorMap out;
    for (const TensorEntry& e : c.entries) {
        StTensor t;
        t.dtype = e.dtype;
        t.shape = e.shape;
        if (e.kind == EntryKind::PassThrough) {
            t.data = e.raw;
        } else {
            CodeMatrix cm;
            cm.rows = e.shape[0];
            cm.cols = (e.shape[1] + 1) / 2;
            cm.max_code_bound = e.aux.max_code_bound();
            cm.codes = unpack_codes(e.payload);
            const Matrix w = decode_tensor(cm, e.aux, e.shape[0], e.shape[1]);
            const auto dt = dtype_from_name(e.dtype);
            t = matrix_to_tensor(w, *dt);
        }
        if (!out.emplace(e.name, std::move(t)).second) {
            throw corrupt_data("container: duplicate entry name '" + e.name + "'");
        }
    }
    emit_safetensors(out, cfg.output);
    std::cout << "decompressed " << cfg.input << " -> " << cfg.output << " (" << out.size()
              << " tensors)\n";
    return 0;
}

int cmd_verify(const RunConfig& cfg) {
    const TensorMap original = ingest_safetensors(cfg.input);
    const Container c = read_container(cfg.container_path);

    std::vector<TensorRow> rows;
    bool ok = true;
    bool budget_ok = true;
    double max_abs_all = 0.0;

    for (const TensorEntry& e : c.entries) {
        TensorRow row;
        row.name = e.name;
        row.shape = e.shape;
        row.dtype = e.dtype;
        const auto it = original.find(e.name);
        if (it == original.end()) {
            row.kind = "missing";
            row.note = "tensor not present in original";
            ok = false;
            rows.push_back(std::move(row));
            continue;
        }
        const StTensor& t = it->second;
        row.elements = t.numel();
        if (t.shape != e.shape || t.dtype != e.dtype) {
            row.kind = "mismatch";
            row.note = "shape or dtype differs from original";
            ok = false;
            rows.push_back(std::move(row));
            continue;
        }
        if (e.kind == EntryKind::PassThrough) {
            row.kind = "passthrough";
            if (t.data != e.raw) {
                row.note = "pass-through bytes differ";
                ok = false;
            }
        } else {
            row.kind = "compressed";
            CodeMatrix cm;
            cm.rows = e.shape[0];
            cm.cols = (e.shape[1] + 1) / 2;
            cm.max_code_bound = e.aux.max_code_bound();
            cm.codes = unpack_codes(e.payload);
            const Matrix w_star = decode_tensor(cm, e.aux, e.shape[0], e.shape[1]);
            const Matrix w = tensor_to_matrix(t);
            row.mae = mae(w, w_star);
            double mx = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                mx = std::max(mx, std::fabs(static_cast<double>(w.data[i]) -
                                            static_cast<double>(w_star.data[i])));
            }
            max_abs_all = std::max(max_abs_all, mx);
            row.ratio = static_cast<double>(e.original_bytes) /
                        static_cast<double>(e.payload.bytes.size());
            row.bits_per_param =
                static_cast<double>(e.payload.code_count * e.payload.bit_width) /
                static_cast<double>(t.numel());
            if (row.mae != e.mae) {
                row.note = "recomputed MAE differs from compress-time report";
                ok = false;
            }
            if (cfg.mae_budget >= 0.0 && row.mae > cfg.mae_budget) budget_ok = false;
            row.max_abs = mx;
        }
        rows.push_back(std::move(row));
    }

    if (cfg.format == ReportFormat::Json) {
        json j;
        j["command"] = "verify";
        j["original"] = cfg.input;
        j["container"] = cfg.container_path;
        j["tensors"] = rows_json(rows);
        j["totals"] = {{"ratio", c.totals.ratio},
                       {"max_abs", max_abs_all},
                       {"consistent", ok},
                       {"budget_ok", budget_ok}};
        std::cout << j.dump(2) << '\n';
    } else if (cfg.format == ReportFormat::Csv) {
        print_rows_csv(std::cout, rows);
    } else {
        std::cout << "verify " << cfg.container_path << " against " << cfg.input << '\n';
        for (const TensorRow& r : rows) {
            std::cout << "  " << r.name << "  " << r.kind;
            if (r.kind == "compressed") {
                std::cout << "  mae=" << r.mae << "  max_abs=" << r.max_abs
                          << "  ratio=" << r.ratio;
            }
            if (!r.note.empty()) std::cout << "  (" << r.note << ")";
            std::cout << '\n';
        }
        std::cout << "whole-model ratio: " << c.totals.ratio << "x\n";
    }

    if (!ok) {
        std::cerr << "error: verification failed\n";
        return 1;
    }
    if (!budget_ok) {
        std::cerr << "error: MAE budget " << cfg.mae_budget << " exceeded\n";
        return 1;
    }
    return 0;
}

int cmd_inspect(const RunConfig& cfg) {
    const Container c = read_container(cfg.input);
    std::vector<TensorRow> rows;
    for (const TensorEntry& e : c.entries) {
        TensorRow row;
        row.name = e.name;
        row.shape = e.shape;
        row.dtype = e.dtype;
        uint64_t elems = 1;
        for (const uint64_t d : e.shape) elems *= d;
        row.elements = elems;
        if (e.kind == EntryKind::Compressed) {
            row.kind = "compressed";
            row.mae = e.mae;
            row.bits_per_param =
                static_cast<double>(e.payload.code_count * e.payload.bit_width) /
                static_cast<double>(elems);
            row.ratio = static_cast<double>(e.original_bytes) /
                        static_cast<double>(e.payload.bytes.size());
        } else {
            row.kind = "passthrough";
            row.bits_per_param = elems > 0 ? 8.0 * static_cast<double>(e.raw.size()) /
                                                 static_cast<double>(elems)
                                           : 0.0;
        }
        rows.push_back(std::move(row));
    }

    if (cfg.format == ReportFormat::Json) {
        json j;
        j["command"] = "inspect";
        j["path"] = cfg.input;
        j["tensors"] = rows_json(rows);
        j["totals"] = {{"original_bytes", c.totals.original_bytes},
                       {"stored_bytes", c.totals.stored_bytes},
                       {"ratio", c.totals.ratio}};
        std::cout << j.dump(2) << '\n';
    } else if (cfg.format == ReportFormat::Csv) {
        print_rows_csv(std::cout, rows);
    } else {
        std::cout << cfg.input << ": " << c.entries.size() << " entries\n";
        print_rows_text(std::cout, rows);
        std::cout << "totals: original=" << c.totals.original_bytes
                  << " B, stored=" << c.totals.stored_bytes << " B, ratio=" << c.totals.ratio
                  << "x\n";
    }
    return 0;
}

int cmd_bench(const RunConfig& cfg) {
    BenchOptions opt;
    opt.workers = cfg.workers;
    opt.cfg = BlockConfig{cfg.block_rows, cfg.block_cols, cfg.block_depth};
    opt.l = cfg.bench_l;
    opt.u = cfg.bench_u;
    opt.m_categories = cfg.bench_m_categories;
    opt.weight_std = cfg.bench_std;

    std::ostringstream label;
    if (cfg.bench_checkpoint.empty()) {
        label << cfg.bench_m << 'x' << cfg.bench_k << 'x' << cfg.bench_n;
    } else {
        label << cfg.bench_m << 'x' << cfg.bench_checkpoint;
    }
    std::vector<BenchCase> cases;
    for (const Strategy s : {Strategy::Dense, Strategy::DecompressThenGemm, Strategy::Fused}) {
        BenchCase bc;
        bc.label = label.str();
        bc.m = cfg.bench_m;
        bc.k = cfg.bench_k;
        bc.n = cfg.bench_n;
        bc.checkpoint = cfg.bench_checkpoint;
        bc.strategy = s;
        bc.repeats = cfg.bench_repeats;
        bc.seed = cfg.seed;
        cases.push_back(std::move(bc));
    }

    const BenchReport report = run_suite(cases, opt);

    double dense_ms = 0.0, fused_ms = 0.0;
    bool all_correct = true;
    for (const CaseResult& r : report.cases) {
        if (r.strategy == Strategy::Dense) dense_ms += r.median_ms;
        if (r.strategy == Strategy::Fused) fused_ms += r.median_ms;
        all_correct = all_correct && r.correct;
    }

    if (cfg.format == ReportFormat::Json) {
        std::cout << report_json(report) << '\n';
    } else if (cfg.format == ReportFormat::Csv) {
        std::cout << report_csv(report);
    } else {
        std::cout << "bench " << label.str() << " on " << report.machine << ", workers="
                  << report.workers << '\n';
        for (const CaseResult& r : report.cases) {
            std::cout << "  " << r.label << " " << strategy_name(r.strategy)
                      << ": median=" << r.median_ms << " ms, min=" << r.min_ms << " ms"
                      << (r.correct ? "" : "  [CROSS-CHECK FAILED]") << '\n';
        }
        std::cout << "  compression ratio=" << report.compression_ratio << "x in "
                  << report.compression_ms << " ms, mae=" << report.mae << '\n';
        if (dense_ms > 0.0) {
            std::cout << "  fused/dense slowdown: " << fused_ms / dense_ms << "x\n";
        }
    }
    return all_correct ? 0 : 1;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Hyper-compression codec for neural network weights"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RunConfig cfg;
    std::string format = "text";

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--workers", cfg.workers, "worker thread count (0 = all)")
            ->envname("BIRKHOFF_WORKERS");
        sub->add_option("--format", format, "report format: text, json or csv")
            ->check(CLI::IsMember({"text", "json", "csv"}));
    };

    CLI::App* compress = app.add_subcommand("compress", "compress a safetensors checkpoint");
    compress->add_option("input", cfg.input, "input .safetensors file")->required();
    compress->add_option("-o,--output", cfg.output, "output .bhc container")->required();
    compress->add_option("--preset", cfg.preset, "hyperparameter preset name");
    compress->add_option("--preset-file", cfg.preset_file, "extra presets, plain text");
    compress->add_option("--l", cfg.l_list, "box length candidates (repeatable)");
    compress->add_option("--U", cfg.u_list, "codebook size candidates (repeatable)");
    compress->add_option("--M", cfg.m_list, "category count candidates (repeatable)");
    compress->add_option("--min-elems", cfg.policy.min_elements,
                         "minimum element count for compression");
    compress->add_option("--include", cfg.policy.include, "glob of tensor names to compress");
    compress->add_option("--exclude", cfg.policy.exclude, "glob of tensor names to skip");
    compress->add_option("--mae-budget", cfg.mae_budget, "fail if any tensor MAE exceeds this");
    add_common(compress);

    CLI::App* decompress = app.add_subcommand("decompress", "expand a container back");
    decompress->add_option("input", cfg.input, "input .bhc container")->required();
    decompress->add_option("-o,--output", cfg.output, "output .safetensors file")->required();
    add_common(decompress);

    CLI::App* verify = app.add_subcommand("verify", "check a container against the original");
    verify->add_option("original", cfg.input, "original .safetensors file")->required();
    verify->add_option("container", cfg.container_path, "the .bhc container")->required();
    verify->add_option("--mae-budget", cfg.mae_budget, "fail if any tensor MAE exceeds this");
    add_common(verify);

    CLI::App* inspect = app.add_subcommand("inspect", "list container metadata");
    inspect->add_option("path", cfg.input, "the .bhc container")->required();
    add_common(inspect);

    CLI::App* bench = app.add_subcommand("bench", "time dense vs decompress vs fused GEMM");
    bench->add_option("--m", cfg.bench_m, "activation rows");
    bench->add_option("--k", cfg.bench_k, "inner dimension");
    bench->add_option("--n", cfg.bench_n, "weight columns");
    bench->add_option("--checkpoint", cfg.bench_checkpoint,
                      "bench every eligible tensor of this safetensors file instead");
    bench->add_option("--repeats", cfg.bench_repeats, "timed repetitions (>= 3)");
    bench->add_option("--seed", cfg.seed, "rng seed for synthetic matrices");
    bench->add_option("--std", cfg.bench_std, "synthetic weight standard deviation");
    bench->add_option("--l", cfg.bench_l, "box length");
    bench->add_option("--U", cfg.bench_u, "codebook size");
    bench->add_option("--M", cfg.bench_m_categories, "category count");
    bench->add_option("--block-rows", cfg.block_rows, "output row block");
    bench->add_option("--block-cols", cfg.block_cols, "output column block (even)");
    bench->add_option("--block-depth", cfg.block_depth, "reduction block");
    add_common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (cfg.workers < 0) {
        std::cerr << "error: --workers must be at least 1\n";
        return 1;
    }
    if (cfg.workers > 0) {
        omp_set_num_threads(cfg.workers);
    }
    if (format == "json") {
        cfg.format = ReportFormat::Json;
    } else if (format == "csv") {
        cfg.format = ReportFormat::Csv;
    }

    try {
        if (compress->parsed()) {
            cfg.command = Command::Compress;
            return cmd_compress(cfg);
        }
        if (decompress->parsed()) {
            cfg.command = Command::Decompress;
            return cmd_decompress(cfg);
        }
        if (verify->parsed()) {
            cfg.command = Command::Verify;
            return cmd_verify(cfg);
        }
        if (inspect->parsed()) {
            cfg.command = Command::Inspect;
            return cmd_inspect(cfg);
        }
        cfg.command = Command::Bench;
        return cmd_bench(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("birkhoff");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace birkhoff::cli
