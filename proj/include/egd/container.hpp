#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egd/gede.hpp"

namespace egd {

/// EGD1 binary container format.
/// Layout: magic "EGD1", version byte, mode byte, u64 n/m/n_b, u32 l_t/l_b/l_d/beta/tau,
/// schema block, sorted base-position list, cluster-position list, then byte-aligned
/// bases / records / weights bit blocks (MSB-first, no per-record padding), then a
/// 64-bit FNV-1a checksum of all preceding bytes. Multi-byte integers little-endian.

std::vector<uint8_t> serialize(const CompressedDataset& cd);
CompressedDataset deserialize(const std::vector<uint8_t>& bytes);

void write_container(const CompressedDataset& cd, const std::string& path);
CompressedDataset read_container(const std::string& path);

uint64_t fnv1a64(const uint8_t* data, size_t size);

/// File-backed reader that decodes single records while reading only the
/// header, the base block, and the bytes covering the requested record.
class ContainerReader {
public:
    explicit ContainerReader(const std::string& path);

    TypedRow record(size_t index);

    uint64_t n() const { return n_; }
    const Schema& schema() const { return schema_; }

    /// Total bytes read from the file so far, including the prefix.
    uint64_t bytes_read() const { return bytes_read_; }
    /// Bytes consumed up front (header, schema, positions, bases).
    uint64_t prefix_bytes() const { return prefix_bytes_; }

private:
    std::string path_;
    uint64_t bytes_read_ = 0;
    uint64_t prefix_bytes_ = 0;

    uint64_t n_ = 0, m_ = 0, n_b_ = 0;
    uint32_t l_t_ = 0, l_b_ = 0, l_d_ = 0;
    uint32_t id_bits_ = 0;
    Schema schema_;
    std::vector<uint32_t> base_positions_;
    std::vector<uint32_t> dev_positions_;
    std::vector<std::vector<bool>> bases_;
    uint64_t records_offset_ = 0; // byte offset of the records block
};

} // namespace egd
