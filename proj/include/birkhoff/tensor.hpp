#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace birkhoff {

// Floating dtypes the codec understands. Anything else rides along as raw bytes.
enum class Dtype : uint8_t { F32, F16 };

const char* dtype_name(Dtype dt);
std::optional<Dtype> dtype_from_name(std::string_view name);
std::size_t dtype_size(Dtype dt);

// Bit-exact IEEE 754 binary16 <-> binary32. Round-trips every 16-bit pattern,
// including subnormals, infinities and NaN payloads.
float half_to_float(uint16_t h);
uint16_t float_to_half(float f);

// Dense row-major fp32 matrix. All codec math happens on this representation;
// F16 inputs are widened on ingest and narrowed again on emission.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

    float& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const float& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::size_t size() const { return data.size(); }
};

} // namespace birkhoff
