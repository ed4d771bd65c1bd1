#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "birkhoff/bitpack.hpp"
#include "birkhoff/codec.hpp"
#include "birkhoff/safetensors.hpp"

namespace birkhoff {

uint32_t crc32(std::span<const uint8_t> bytes);

enum class EntryKind : uint8_t { Compressed, PassThrough };

struct TensorEntry {
    std::string name;
    EntryKind kind = EntryKind::PassThrough;
    std::vector<uint64_t> shape;  // original shape
    std::string dtype;            // original dtype string
    uint64_t original_bytes = 0;

    // Compressed entries only
    bool pad_applied = false;
    AuxParams aux;
    PackedPayload payload;
    double mae = 0.0; // reconstruction MAE measured at compress time

    // PassThrough entries only
    std::vector<uint8_t> raw;
};

struct ContainerTotals {
    uint64_t original_bytes = 0;
    uint64_t stored_bytes = 0; // whole file, manifest included
    double ratio = 0.0;        // original / stored
};

struct Container {
    std::vector<TensorEntry> entries;
    ContainerTotals totals;
};

// On-disk layout: "BHC1" magic, u32 version, u64 manifest length, JSON manifest
// (space-padded so payload starts 64-byte aligned), then 64-byte-aligned blobs.
// All integers little-endian. Payload bytes are CRC-checked on read.
void write_container(const std::vector<TensorEntry>& entries, const std::string& path);
Container read_container(const std::string& path);

struct EligibilityPolicy {
    uint64_t min_elements = 4096;
    std::vector<std::string> include; // glob patterns; empty means everything
    std::vector<std::string> exclude; // glob patterns; exclusion wins
};

// '*' matches any run of characters, '?' a single one.
bool glob_match(std::string_view pattern, std::string_view name);

// 2-D float tensors at or above the element threshold compress; biases, small
// and non-2-D tensors pass through untouched.
EntryKind eligibility(const std::string& name, const StTensor& tensor,
                      const EligibilityPolicy& policy);

} // namespace birkhoff
