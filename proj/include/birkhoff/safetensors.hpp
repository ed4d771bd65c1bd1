#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "birkhoff/tensor.hpp"

namespace birkhoff {

// One tensor slice from a safetensors file: metadata plus the raw little-endian
// payload bytes. Floats stay raw until someone asks for a Matrix.
struct StTensor {
    std::string dtype;            // dtype string as written in the file
    std::vector<uint64_t> shape;
    std::vector<uint8_t> data;

    uint64_t numel() const;
    bool is_codec_float() const { return dtype == "F32" || dtype == "F16"; }
};

// Name-ordered so reports and emitted files are deterministic.
using TensorMap = std::map<std::string, StTensor>;

TensorMap ingest_safetensors(const std::string& path);
void emit_safetensors(const TensorMap& tensors, const std::string& path);

// 2-D F32/F16 tensors only; F16 is widened element-wise.
Matrix tensor_to_matrix(const StTensor& t);
StTensor matrix_to_tensor(const Matrix& m, Dtype dtype);

} // namespace birkhoff
