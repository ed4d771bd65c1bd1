#include "birkhoff/safetensors.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "birkhoff/error.hpp"

namespace birkhoff {

namespace {

using nlohmann::json;

// Sizes for the dtype strings safetensors commonly carries; unknown strings are
// tolerated (the tensor just can't be size-checked or compressed).
std::size_t known_dtype_size(const std::string& dt) {
    if (dt == "F64" || dt == "I64" || dt == "U64") return 8;
    if (dt == "F32" || dt == "I32" || dt == "U32") return 4;
    if (dt == "F16" || dt == "BF16" || dt == "I16" || dt == "U16") return 2;
    if (dt == "I8" || dt == "U8" || dt == "BOOL" || dt == "F8_E4M3" || dt == "F8_E5M2") return 1;
    return 0;
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open file: " + path);
    }
    in.seekg(0, std::ios::end);
    const std::streamoff len = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<uint8_t> bytes(static_cast<std::size_t>(len));
    if (len > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), len)) {
        throw io_error("short read: " + path);
    }
    return bytes;
}

uint64_t read_u64_le(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

} // namespace

uint64_t StTensor::numel() const {
    uint64_t n = 1;
    for (const uint64_t d : shape) n *= d;
    return n;
}

TensorMap ingest_safetensors(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file(path);
    if (bytes.size() < 8) {
        throw corrupt_data("safetensors: file shorter than its length prefix");
    }
    const uint64_t header_len = read_u64_le(bytes.data());
    if (header_len > bytes.size() - 8) {
        throw corrupt_data("safetensors: header length exceeds file size");
    }

    json header;
    try {
        header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
    } catch (const json::exception& e) {
        throw corrupt_data(std::string("safetensors: malformed header JSON: ") + e.what());
    }
    if (!header.is_object()) {
        throw corrupt_data("safetensors: header is not a JSON object");
    }

    const uint8_t* payload = bytes.data() + 8 + header_len;
    const uint64_t payload_len = bytes.size() - 8 - header_len;

    TensorMap out;
    std::vector<std::pair<uint64_t, uint64_t>> ranges;
    for (const auto& [name, meta] : header.items()) {
        if (name == "__metadata__") continue;
        if (!meta.is_object() || !meta.contains("dtype") || !meta.contains("shape") ||
            !meta.contains("data_offsets")) {
            throw corrupt_data("safetensors: entry '" + name + "' missing dtype/shape/offsets");
        }
        StTensor t;
        t.dtype = meta["dtype"].get<std::string>();
        for (const auto& d : meta["shape"]) {
            t.shape.push_back(d.get<uint64_t>());
        }
        const auto& off = meta["data_offsets"];
        if (!off.is_array() || off.size() != 2) {
            throw corrupt_data("safetensors: entry '" + name + "' has bad data_offsets");
        }
        const auto begin = off[0].get<uint64_t>();
        const auto end = off[1].get<uint64_t>();
        if (begin > end || end > payload_len) {
            throw corrupt_data("safetensors: entry '" + name + "' offsets out of bounds");
        }
        const std::size_t esize = known_dtype_size(t.dtype);
        if (esize != 0 && end - begin != t.numel() * esize) {
            throw corrupt_data("safetensors: entry '" + name + "' length does not match shape");
        }
        t.data.assign(payload + begin, payload + end);
        ranges.emplace_back(begin, end);
        out.emplace(name, std::move(t));
    }

    std::sort(ranges.begin(), ranges.end());
    for (std::size_t i = 1; i < ranges.size(); ++i) {
        if (ranges[i].first < ranges[i - 1].second) {
            throw corrupt_data("safetensors: overlapping tensor data ranges");
        }
    }
    return out;
}

void emit_safetensors(const TensorMap& tensors, const std::string& path) {
    json header = json::object();
    uint64_t offset = 0;
    for (const auto& [name, t] : tensors) {
        json meta;
        meta["dtype"] = t.dtype;
        meta["shape"] = t.shape;
        meta["data_offsets"] = {offset, offset + t.data.size()};
        header[name] = std::move(meta);
        offset += t.data.size();
    }

    std::string hdr = header.dump();
    while (hdr.size() % 8 != 0) hdr.push_back(' ');

    std::ofstream outf(path, std::ios::binary | std::ios::trunc);
    if (!outf) {
        throw io_error("cannot open file for writing: " + path);
    }
    const uint64_t hlen = hdr.size();
    uint8_t lenbuf[8];
    for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<uint8_t>((hlen >> (8 * i)) & 0xFFu);
    outf.write(reinterpret_cast<const char*>(lenbuf), 8);
    outf.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    for (const auto& [name, t] : tensors) {
        (void)name;
        outf.write(reinterpret_cast<const char*>(t.data.data()),
                   static_cast<std::streamsize>(t.data.size()));
    }
    if (!outf) {
        throw io_error("write failed: " + path);
    }
}

Matrix tensor_to_matrix(const StTensor& t) {
    if (t.shape.size() != 2) {
        throw invalid_input("tensor_to_matrix: tensor is not 2-D");
    }
    const auto dt = dtype_from_name(t.dtype);
    if (!dt) {
        throw invalid_input("tensor_to_matrix: unsupported dtype " + t.dtype);
    }
    Matrix m(static_cast<std::size_t>(t.shape[0]), static_cast<std::size_t>(t.shape[1]));
    if (t.data.size() != m.size() * dtype_size(*dt)) {
        throw corrupt_data("tensor_to_matrix: payload length mismatch");
    }
    if (*dt == Dtype::F32) {
        std::memcpy(m.data.data(), t.data.data(), t.data.size());
    } else {
        for (std::size_t i = 0; i < m.size(); ++i) {
            uint16_t h;
            std::memcpy(&h, t.data.data() + 2 * i, 2);
            m.data[i] = half_to_float(h);
        }
    }
    return m;
}

StTensor matrix_to_tensor(const Matrix& m, Dtype dtype) {
    StTensor t;
    t.dtype = dtype_name(dtype);
    t.shape = {m.rows, m.cols};
    t.data.resize(m.size() * dtype_size(dtype));
    if (dtype == Dtype::F32) {
        std::memcpy(t.data.data(), m.data.data(), t.data.size());
    } else {
        for (std::size_t i = 0; i < m.size(); ++i) {
            const uint16_t h = float_to_half(m.data[i]);
            std::memcpy(t.data.data() + 2 * i, &h, 2);
        }
    }
    return t;
}

} // namespace birkhoff
