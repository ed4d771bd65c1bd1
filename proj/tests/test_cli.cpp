#include <unistd.h>
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "birkhoff/cli.hpp"
#include "birkhoff/safetensors.hpp"
#include "test_oracles.hpp"

using namespace birkhoff;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("birkhoff_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
    std::string file(const char* name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

// two compressible layers, one bias, one int tensor that must pass through
void write_fixture(const std::string& path) {
    oracle::Rng rng(1234);
    TensorMap m;

    StTensor w0;
    w0.dtype = "F32";
    w0.shape = {64, 64};
    w0.data.resize(64 * 64 * 4);
    std::vector<float> vals(64 * 64);
    for (float& v : vals) v = static_cast<float>(rng.uniform(-0.06, 0.06));
    std::memcpy(w0.data.data(), vals.data(), w0.data.size());
    m.emplace("layers.0.weight", std::move(w0));

    StTensor w1;
    w1.dtype = "F16";
    w1.shape = {80, 64};
    w1.data.resize(80 * 64 * 2);
    for (std::size_t i = 0; i < 80 * 64; ++i) {
        const uint16_t h = float_to_half(static_cast<float>(rng.uniform(-0.06, 0.06)));
        std::memcpy(w1.data.data() + 2 * i, &h, 2);
    }
    m.emplace("layers.1.weight", std::move(w1));

    StTensor bias;
    bias.dtype = "F32";
    bias.shape = {64};
    bias.data.resize(256);
    for (uint8_t& b : bias.data) b = static_cast<uint8_t>(rng.next() & 0xFF);
    m.emplace("layers.0.bias", std::move(bias));

    StTensor ids;
    ids.dtype = "I64";
    ids.shape = {16};
    ids.data.resize(128);
    for (uint8_t& b : ids.data) b = static_cast<uint8_t>(rng.next() & 0xFF);
    m.emplace("vocab.ids", std::move(ids));

    emit_safetensors(m, path);
}

} // namespace

TEST_CASE("compress, inspect, decompress, verify round trip") {
    TempDir dir;
    const std::string input = dir.file("model.safetensors");
    const std::string packed = dir.file("model.bhc");
    const std::string restored = dir.file("restored.safetensors");
    write_fixture(input);

    CHECK(cli::run({"compress", input, "-o", packed, "--U", "100", "--l", "0.1", "--M", "3",
                    "--workers", "2"}) == 0);
    CHECK(fs::exists(packed));

    CHECK(cli::run({"inspect", packed}) == 0);
    CHECK(cli::run({"inspect", packed, "--format", "json"}) == 0);

    CHECK(cli::run({"decompress", packed, "-o", restored}) == 0);

    const TensorMap orig = ingest_safetensors(input);
    const TensorMap back = ingest_safetensors(restored);
    REQUIRE(back.size() == orig.size());
    for (const auto& [name, t] : orig) {
        REQUIRE(back.count(name) == 1);
        CHECK(back.at(name).dtype == t.dtype);
        CHECK(back.at(name).shape == t.shape);
    }
    // pass-through tensors come back bit-identical
    CHECK(back.at("layers.0.bias").data == orig.at("layers.0.bias").data);
    CHECK(back.at("vocab.ids").data == orig.at("vocab.ids").data);

    CHECK(cli::run({"verify", input, packed}) == 0);
    CHECK(cli::run({"verify", input, packed, "--format", "json"}) == 0);
}

TEST_CASE("mae budget failures exit with code 1") {
    TempDir dir;
    const std::string input = dir.file("model.safetensors");
    const std::string packed = dir.file("model.bhc");
    write_fixture(input);

    CHECK(cli::run({"compress", input, "-o", packed, "--U", "100", "--mae-budget", "1e-9"}) ==
          1);
    // the container is still written and verifiable, just over budget
    CHECK(cli::run({"verify", input, packed, "--mae-budget", "1e-9"}) == 1);
    CHECK(cli::run({"verify", input, packed}) == 0);
}

TEST_CASE("presets apply and unknown presets fail with the available list") {
    TempDir dir;
    const std::string input = dir.file("model.safetensors");
    write_fixture(input);

    CHECK(cli::run({"compress", input, "-o", dir.file("a.bhc"), "--preset", "sam-b"}) == 0);
    CHECK(cli::run({"compress", input, "-o", dir.file("b.bhc"), "--preset", "not-a-model"}) ==
          1);

    std::ofstream pf(dir.file("my.presets"));
    pf << "custom l=0.1 U=49 M=2\n";
    pf.close();
    CHECK(cli::run({"compress", input, "-o", dir.file("c.bhc"), "--preset", "custom",
                    "--preset-file", dir.file("my.presets")}) == 0);
}

TEST_CASE("tampered containers are reported as corruption (exit 2)") {
    TempDir dir;
    const std::string input = dir.file("model.safetensors");
    const std::string packed = dir.file("model.bhc");
    write_fixture(input);
    REQUIRE(cli::run({"compress", input, "-o", packed, "--U", "64"}) == 0);

    std::fstream io(packed, std::ios::binary | std::ios::in | std::ios::out);
    io.seekp(-1, std::ios::end);
    io.put('\x42');
    io.close();

    CHECK(cli::run({"inspect", packed}) == 2);
    CHECK(cli::run({"verify", input, packed}) == 2);
}

TEST_CASE("missing and malformed inputs exit with code 2") {
    TempDir dir;
    CHECK(cli::run({"compress", dir.file("nope.safetensors"), "-o", dir.file("x.bhc")}) == 2);
    CHECK(cli::run({"inspect", dir.file("nope.bhc")}) == 2);

    const std::string junk = dir.file("junk.bhc");
    std::ofstream(junk) << "this is not a container";
    CHECK(cli::run({"inspect", junk}) == 2);
}

TEST_CASE("eligibility flags reach the pipeline") {
    TempDir dir;
    const std::string input = dir.file("model.safetensors");
    const std::string packed = dir.file("model.bhc");
    write_fixture(input);

    // raise the threshold so nothing qualifies; every entry passes through
    CHECK(cli::run({"compress", input, "-o", packed, "--min-elems", "1000000"}) == 0);
    const Container c = read_container(packed);
    for (const TensorEntry& e : c.entries) {
        CHECK(e.kind == EntryKind::PassThrough);
    }

    const std::string packed2 = dir.file("model2.bhc");
    CHECK(cli::run({"compress", input, "-o", packed2, "--U", "64", "--exclude",
                    "layers.1.*"}) == 0);
    const Container c2 = read_container(packed2);
    for (const TensorEntry& e : c2.entries) {
        if (e.name == "layers.1.weight") CHECK(e.kind == EntryKind::PassThrough);
        if (e.name == "layers.0.weight") CHECK(e.kind == EntryKind::Compressed);
    }
}

TEST_CASE("verify JSON report is identical across runs") {
    TempDir dir;
    const std::string input = dir.file("model.safetensors");
    const std::string packed = dir.file("model.bhc");
    write_fixture(input);
    REQUIRE(cli::run({"compress", input, "-o", packed, "--U", "64"}) == 0);

    const auto capture = [&]() {
        std::ostringstream sink;
        std::streambuf* saved = std::cout.rdbuf(sink.rdbuf());
        const int rc = cli::run({"verify", input, packed, "--format", "json"});
        std::cout.rdbuf(saved);
        REQUIRE(rc == 0);
        return sink.str();
    };
    CHECK(capture() == capture());
}

TEST_CASE("verify fails when the original is missing or reshaped") {
    TempDir dir;
    const std::string input = dir.file("model.safetensors");
    const std::string packed = dir.file("model.bhc");
    write_fixture(input);
    REQUIRE(cli::run({"compress", input, "-o", packed, "--U", "64"}) == 0);

    // drop one tensor from the "original"
    TensorMap trimmed = ingest_safetensors(input);
    trimmed.erase("layers.0.weight");
    const std::string missing = dir.file("missing.safetensors");
    emit_safetensors(trimmed, missing);
    CHECK(cli::run({"verify", missing, packed}) == 1);

    // reshape another
    TensorMap reshaped = ingest_safetensors(input);
    reshaped.at("layers.0.weight").shape = {32, 128};
    const std::string shaped = dir.file("reshaped.safetensors");
    emit_safetensors(reshaped, shaped);
    CHECK(cli::run({"verify", shaped, packed}) == 1);
}

TEST_CASE("bench subcommand runs the three strategies") {
    CHECK(cli::run({"bench", "--m", "8", "--k", "16", "--n", "12", "--repeats", "3", "--U",
                    "64", "--block-rows", "8", "--block-cols", "8", "--block-depth", "8",
                    "--format", "csv"}) == 0);
}

TEST_CASE("bad flags exit with code 1") {
    CHECK(cli::run({"compress"}) == 1);                    // missing required args
    CHECK(cli::run({"no-such-command"}) == 1);
    CHECK(cli::run({"bench", "--format", "yaml"}) == 1);   // not in the member set
}
