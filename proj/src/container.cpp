#include "birkhoff/container.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "birkhoff/error.hpp"

namespace birkhoff {

namespace {

using nlohmann::json;

constexpr std::array<char, 4> kMagic{'B', 'H', 'C', '1'};
constexpr uint32_t kVersion = 1;
constexpr uint64_t kBlobAlign = 64;

std::array<uint32_t, 256> make_crc_table() {
    std::array<uint32_t, 256> table{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k) {
            c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
        }
        table[i] = c;
    }
    return table;
}

uint64_t align_up(uint64_t v, uint64_t a) { return (v + a - 1) / a * a; }

json aux_to_json(const AuxParams& aux) {
    // compact keys keep the sidecar under 128 bytes; delta is rederived on load
    json j;
    j["l"] = aux.l;
    j["U"] = aux.U;
    j["M"] = aux.M;
    j["c"] = {aux.stats.centroid.x, aux.stats.centroid.y};
    j["lf"] = aux.stats.l_f;
    j["k"] = static_cast<int>(aux.kind);
    return j;
}

AuxParams aux_from_json(const json& j) {
    const int kind_raw = j.at("k").get<int>();
    if (kind_raw != 0 && kind_raw != 1) {
        throw corrupt_data("container: unknown codebook kind");
    }
    BoxStats stats;
    stats.centroid = Vec2{j.at("c").at(0).get<double>(), j.at("c").at(1).get<double>()};
    stats.l_f = j.at("lf").get<double>();
    AuxParams aux;
    try {
        aux = AuxParams::make(j.at("l").get<double>(), j.at("U").get<uint32_t>(),
                              j.at("M").get<uint32_t>(), stats,
                              static_cast<CodebookKind>(kind_raw));
    } catch (const invalid_input& e) {
        throw corrupt_data(std::string("container: bad aux record: ") + e.what());
    }
    if (aux.U != j.at("U").get<uint32_t>()) {
        throw corrupt_data("container: stored codebook size is not normalized");
    }
    return aux;
}

uint64_t expected_code_count(const TensorEntry& e) {
    return e.shape[0] * ((e.shape[1] + 1) / 2);
}

void validate_compressed_entry(const TensorEntry& e) {
    if (e.shape.size() != 2 || e.shape[0] == 0 || e.shape[1] == 0) {
        throw invalid_input("container: compressed entry '" + e.name + "' must be 2-D");
    }
    if (!dtype_from_name(e.dtype)) {
        throw invalid_input("container: compressed entry '" + e.name +
                            "' has non-float dtype " + e.dtype);
    }
    if (e.payload.bit_width != bits_for_bound(e.aux.max_code_bound())) {
        throw invalid_input("container: entry '" + e.name + "' bit width does not match aux");
    }
    if (e.payload.code_count != expected_code_count(e)) {
        throw invalid_input("container: entry '" + e.name + "' code count does not match shape");
    }
    if (e.pad_applied != (e.shape[1] % 2 != 0)) {
        throw invalid_input("container: entry '" + e.name + "' pad flag does not match shape");
    }
}

} // namespace

uint32_t crc32(std::span<const uint8_t> bytes) {
    static const std::array<uint32_t, 256> table = make_crc_table();
    uint32_t c = 0xFFFFFFFFu;
    for (const uint8_t b : bytes) {
        c = table[(c ^ b) & 0xFFu] ^ (c >> 8);
    }
    return c ^ 0xFFFFFFFFu;
}

void write_container(const std::vector<TensorEntry>& entries, const std::string& path) {
    // blob table first; offsets are relative to the 64-aligned payload base
    json jentries = json::array();
    uint64_t rel = 0;
    uint64_t original_total = 0;
    std::vector<const std::vector<uint8_t>*> blobs;
    for (const TensorEntry& e : entries) {
        json je;
        je["name"] = e.name;
        je["shape"] = e.shape;
        je["dtype"] = e.dtype;
        je["orig_bytes"] = e.original_bytes;
        const std::vector<uint8_t>* blob = nullptr;
        if (e.kind == EntryKind::Compressed) {
            validate_compressed_entry(e);
            je["kind"] = "c";
            je["pad"] = e.pad_applied;
            je["aux"] = aux_to_json(e.aux);
            je["bits"] = e.payload.bit_width;
            je["codes"] = e.payload.code_count;
            je["mae"] = e.mae;
            blob = &e.payload.bytes;
        } else {
            je["kind"] = "p";
            blob = &e.raw;
        }
        rel = align_up(rel, kBlobAlign);
        je["off"] = rel;
        je["len"] = blob->size();
        je["crc"] = crc32(*blob);
        rel += blob->size();
        original_total += e.original_bytes;
        blobs.push_back(blob);
        jentries.push_back(std::move(je));
    }
    const uint64_t blob_span = rel;

    json manifest;
    manifest["format"] = std::string(kMagic.data(), kMagic.size());
    manifest["version"] = kVersion;
    manifest["entries"] = std::move(jentries);
    manifest["totals"] = {{"original_bytes", original_total},
                          {"stored_bytes", 0},
                          {"ratio", 0.0}};

    // The manifest length feeds back into stored_bytes, so fix the padded
    // length first (with slack for digit growth), then fill in real totals.
    const uint64_t draft_len = manifest.dump().size();
    uint64_t manifest_len = align_up(16 + draft_len + 64, kBlobAlign) - 16;
    const uint64_t payload_base = 16 + manifest_len;
    const uint64_t stored_total = payload_base + blob_span;
    manifest["totals"]["stored_bytes"] = stored_total;
    manifest["totals"]["ratio"] =
        stored_total > 0 ? static_cast<double>(original_total) / static_cast<double>(stored_total)
                         : 0.0;

    std::string text = manifest.dump();
    if (text.size() > manifest_len) {
        throw io_error("container: manifest slack exhausted"); // 64 bytes covers digit growth
    }
    text.resize(manifest_len, ' ');

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("cannot open file for writing: " + path);
    }
    out.write(kMagic.data(), kMagic.size());
    uint8_t u32buf[4];
    for (int i = 0; i < 4; ++i) u32buf[i] = static_cast<uint8_t>((kVersion >> (8 * i)) & 0xFFu);
    out.write(reinterpret_cast<const char*>(u32buf), 4);
    uint8_t u64buf[8];
    for (int i = 0; i < 8; ++i) u64buf[i] = static_cast<uint8_t>((manifest_len >> (8 * i)) & 0xFFu);
    out.write(reinterpret_cast<const char*>(u64buf), 8);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));

    uint64_t pos = 0;
    for (const auto* blob : blobs) {
        const uint64_t aligned = align_up(pos, kBlobAlign);
        for (uint64_t i = pos; i < aligned; ++i) out.put('\0');
        out.write(reinterpret_cast<const char*>(blob->data()),
                  static_cast<std::streamsize>(blob->size()));
        pos = aligned + blob->size();
    }
    if (!out) {
        throw io_error("write failed: " + path);
    }
}

Container read_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open file: " + path);
    }
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 16) {
        throw corrupt_data("container: file too short");
    }
    if (std::memcmp(bytes.data(), kMagic.data(), 4) != 0) {
        throw corrupt_data("container: bad magic, not a BHC1 file");
    }
    uint32_t version = 0;
    for (int i = 3; i >= 0; --i) version = (version << 8) | bytes[4 + i];
    if (version != kVersion) {
        throw corrupt_data("container: unsupported version " + std::to_string(version));
    }
    uint64_t manifest_len = 0;
    for (int i = 7; i >= 0; --i) manifest_len = (manifest_len << 8) | bytes[8 + i];
    if (manifest_len > bytes.size() - 16) {
        throw corrupt_data("container: manifest length exceeds file size");
    }

    json manifest;
    try {
        manifest = json::parse(bytes.begin() + 16, bytes.begin() + 16 + manifest_len);
    } catch (const json::exception& e) {
        throw corrupt_data(std::string("container: malformed manifest: ") + e.what());
    }

    const uint64_t payload_base = 16 + manifest_len;
    const uint64_t payload_len = bytes.size() - payload_base;
    const uint8_t* payload = bytes.data() + payload_base;

    Container c;
    try {
        for (const json& je : manifest.at("entries")) {
            TensorEntry e;
            e.name = je.at("name").get<std::string>();
            e.shape = je.at("shape").get<std::vector<uint64_t>>();
            e.dtype = je.at("dtype").get<std::string>();
            e.original_bytes = je.at("orig_bytes").get<uint64_t>();
            const auto off = je.at("off").get<uint64_t>();
            const auto len = je.at("len").get<uint64_t>();
            if (off > payload_len || len > payload_len - off) {
                throw corrupt_data("container: entry '" + e.name + "' payload out of bounds");
            }
            const std::string kind = je.at("kind").get<std::string>();
            std::span<const uint8_t> blob(payload + off, len);
            if (crc32(blob) != je.at("crc").get<uint32_t>()) {
                throw corrupt_data("container: entry '" + e.name + "' checksum mismatch");
            }
            if (kind == "c") {
                e.kind = EntryKind::Compressed;
                e.pad_applied = je.at("pad").get<bool>();
                e.aux = aux_from_json(je.at("aux"));
                e.mae = je.at("mae").get<double>();
                e.payload.bit_width = je.at("bits").get<uint32_t>();
                e.payload.code_count = je.at("codes").get<uint64_t>();
                e.payload.bytes.assign(blob.begin(), blob.end());
                try {
                    validate_compressed_entry(e);
                } catch (const invalid_input& err) {
                    throw corrupt_data(err.what());
                }
            } else if (kind == "p") {
                e.kind = EntryKind::PassThrough;
                e.raw.assign(blob.begin(), blob.end());
            } else {
                throw corrupt_data("container: entry '" + e.name + "' has unknown kind");
            }
            c.entries.push_back(std::move(e));
        }
        const json& totals = manifest.at("totals");
        c.totals.original_bytes = totals.at("original_bytes").get<uint64_t>();
        c.totals.stored_bytes = totals.at("stored_bytes").get<uint64_t>();
        c.totals.ratio = totals.at("ratio").get<double>();
    } catch (const json::exception& e) {
        throw corrupt_data(std::string("container: manifest field error: ") + e.what());
    }
    if (c.totals.stored_bytes != bytes.size()) {
        throw corrupt_data("container: stored size does not match file size");
    }
    return c;
}

bool glob_match(std::string_view pattern, std::string_view name) {
    std::size_t p = 0, n = 0;
    std::size_t star = std::string_view::npos, mark = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = n;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            n = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

EntryKind eligibility(const std::string& name, const StTensor& tensor,
                      const EligibilityPolicy& policy) {
    for (const std::string& pat : policy.exclude) {
        if (glob_match(pat, name)) return EntryKind::PassThrough;
    }
    if (!policy.include.empty()) {
        bool matched = false;
        for (const std::string& pat : policy.include) {
            if (glob_match(pat, name)) {
                matched = true;
                break;
            }
        }
        if (!matched) return EntryKind::PassThrough;
    }
    if (tensor.shape.size() != 2) return EntryKind::PassThrough;
    if (!tensor.is_codec_float()) return EntryKind::PassThrough;
    if (tensor.numel() < policy.min_elements) return EntryKind::PassThrough;
    return EntryKind::Compressed;
}

} // namespace birkhoff
