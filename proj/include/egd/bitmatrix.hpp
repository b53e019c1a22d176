#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "egd/schema.hpp"

namespace egd {

/// Fixed-width binary view of a typed tabular dataset.
/// Each record occupies l_t bits; within a column bits are most-significant first.
class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(size_t n_records, uint32_t bits_per_record, Schema schema);

    size_t rows() const { return n_; }
    uint32_t record_bits() const { return l_t_; }
    const Schema& schema() const { return schema_; }

    bool get(size_t row, uint32_t pos) const {
        size_t bit = row * l_t_ + pos;
        return (words_[bit >> 6] >> (bit & 63)) & 1u;
    }
    void set(size_t row, uint32_t pos, bool value) {
        size_t bit = row * l_t_ + pos;
        uint64_t mask = uint64_t{1} << (bit & 63);
        if (value)
            words_[bit >> 6] |= mask;
        else
            words_[bit >> 6] &= ~mask;
    }

    /// Appends a row given as raw bit values (used when condensed samples join the matrix).
    void append_row(const std::vector<bool>& bits);
    void append_rows(const BitMatrix& other);

    bool operator==(const BitMatrix& other) const;

private:
    size_t n_ = 0;
    uint32_t l_t_ = 0;
    Schema schema_;
    std::vector<uint64_t> words_;
};

/// Per-bit-position Shannon entropy statistics.
struct EntropyProfile {
    std::vector<double> h;           // entropy in bits, one per position
    std::vector<uint64_t> ones_count;
    std::vector<bool> constant_mask; // h == 0 exactly
};

BitMatrix encode_tabular(const std::vector<TypedRow>& rows, const Schema& schema);

std::vector<TypedRow> decode_tabular(const BitMatrix& bm,
                                     const std::optional<std::vector<size_t>>& indices = std::nullopt);

/// Decodes a single record without touching the rest of the matrix.
TypedRow decode_record(const BitMatrix& bm, size_t index);

EntropyProfile bit_entropy(const BitMatrix& bm);

/// Binary entropy of a Bernoulli(p) bit, with 0*log2(0) = 0.
double binary_entropy(double p);

/// Encodes one typed row into l_t bit values (MSB-first per column).
std::vector<bool> encode_record_bits(const TypedRow& row, const Schema& schema);

/// Converts typed rows to a dense double matrix (row-major), for training.
std::vector<std::vector<double>> rows_as_double(const std::vector<TypedRow>& rows);

} // namespace egd
