#include "egd/bitmatrix.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "egd/errors.hpp"

namespace egd {

BitMatrix::BitMatrix(size_t n_records, uint32_t bits_per_record, Schema schema)
    : n_(n_records), l_t_(bits_per_record), schema_(std::move(schema)),
      words_((n_records * bits_per_record + 63) / 64, 0) {}

void BitMatrix::append_row(const std::vector<bool>& bits) {
    if (bits.size() != l_t_) throw ShapeMismatch("appended row has wrong bit count");
    size_t row = n_++;
    words_.resize((n_ * l_t_ + 63) / 64, 0);
    for (uint32_t i = 0; i < l_t_; ++i)
        if (bits[i]) set(row, i, true);
}

void BitMatrix::append_rows(const BitMatrix& other) {
    if (other.l_t_ != l_t_) throw ShapeMismatch("bit widths differ");
    for (size_t r = 0; r < other.n_; ++r) {
        std::vector<bool> bits(l_t_);
        for (uint32_t i = 0; i < l_t_; ++i) bits[i] = other.get(r, i);
        append_row(bits);
    }
}

bool BitMatrix::operator==(const BitMatrix& other) const {
    if (n_ != other.n_ || l_t_ != other.l_t_) return false;
    for (size_t r = 0; r < n_; ++r)
        for (uint32_t i = 0; i < l_t_; ++i)
            if (get(r, i) != other.get(r, i)) return false;
    return true;
}

namespace {

uint64_t value_to_pattern(const TypedValue& v, const ColumnSchema& col) {
    switch (col.kind) {
    case ColumnKind::Float32: {
        const auto* p = std::get_if<float>(&v);
        if (!p) throw SchemaMismatch("column '" + col.name + "' expects float32");
        return std::bit_cast<uint32_t>(*p);
    }
    case ColumnKind::Float64: {
        const auto* p = std::get_if<double>(&v);
        if (!p) throw SchemaMismatch("column '" + col.name + "' expects float64");
        return std::bit_cast<uint64_t>(*p);
    }
    case ColumnKind::Int:
    case ColumnKind::Categorical: {
        const auto* p = std::get_if<int64_t>(&v);
        if (!p) throw SchemaMismatch("column '" + col.name + "' expects integer");
        if (*p < col.offset) throw RangeOverflow("column '" + col.name + "' value below offset");
        uint64_t u = static_cast<uint64_t>(*p) - static_cast<uint64_t>(col.offset);
        if (col.bit_width < 64 && (u >> col.bit_width) != 0)
            throw RangeOverflow("column '" + col.name + "' value exceeds bit width");
        return u;
    }
    }
    throw SchemaMismatch("bad column kind");
}

TypedValue pattern_to_value(uint64_t u, const ColumnSchema& col) {
    switch (col.kind) {
    case ColumnKind::Float32:
        return std::bit_cast<float>(static_cast<uint32_t>(u));
    case ColumnKind::Float64:
        return std::bit_cast<double>(u);
    case ColumnKind::Int:
    case ColumnKind::Categorical:
        return static_cast<int64_t>(u + static_cast<uint64_t>(col.offset));
    }
    throw SchemaMismatch("bad column kind");
}

} // namespace

std::vector<bool> encode_record_bits(const TypedRow& row, const Schema& schema) {
    if (row.size() != schema.size()) throw SchemaMismatch("record arity differs from schema");
    std::vector<bool> bits;
    bits.reserve(record_bits(schema));
    for (size_t c = 0; c < schema.size(); ++c) {
        const auto& col = schema[c];
        uint64_t u = value_to_pattern(row[c], col);
        for (uint32_t k = 0; k < col.bit_width; ++k)
            bits.push_back((u >> (col.bit_width - 1 - k)) & 1u); // MSB first
    }
    return bits;
}

BitMatrix encode_tabular(const std::vector<TypedRow>& rows, const Schema& schema) {
    uint32_t l_t = record_bits(schema);
    BitMatrix bm(0, l_t, schema);
    for (const auto& row : rows) bm.append_row(encode_record_bits(row, schema));
    return bm;
}

TypedRow decode_record(const BitMatrix& bm, size_t index) {
    if (index >= bm.rows()) throw IndexOutOfRange("record " + std::to_string(index));
    const Schema& schema = bm.schema();
    TypedRow row;
    row.reserve(schema.size());
    uint32_t pos = 0;
    for (const auto& col : schema) {
        uint64_t u = 0;
        for (uint32_t k = 0; k < col.bit_width; ++k)
            u = (u << 1) | static_cast<uint64_t>(bm.get(index, pos + k));
        pos += col.bit_width;
        row.push_back(pattern_to_value(u, col));
    }
    return row;
}

std::vector<TypedRow> decode_tabular(const BitMatrix& bm,
                                     const std::optional<std::vector<size_t>>& indices) {
    std::vector<TypedRow> out;
    if (indices) {
        out.reserve(indices->size());
        for (size_t i : *indices) out.push_back(decode_record(bm, i));
    } else {
        out.reserve(bm.rows());
        for (size_t i = 0; i < bm.rows(); ++i) out.push_back(decode_record(bm, i));
    }
    return out;
}

double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

EntropyProfile bit_entropy(const BitMatrix& bm) {
    if (bm.rows() == 0) throw EmptyDataset();
    uint32_t l_t = bm.record_bits();
    EntropyProfile prof;
    prof.h.resize(l_t);
    prof.ones_count.assign(l_t, 0);
    prof.constant_mask.resize(l_t);
    for (size_t r = 0; r < bm.rows(); ++r)
        for (uint32_t i = 0; i < l_t; ++i)
            prof.ones_count[i] += bm.get(r, i);
    for (uint32_t i = 0; i < l_t; ++i) {
        double p = static_cast<double>(prof.ones_count[i]) / static_cast<double>(bm.rows());
        prof.h[i] = binary_entropy(p);
        prof.constant_mask[i] = (prof.ones_count[i] == 0 || prof.ones_count[i] == bm.rows());
    }
    return prof;
}

std::vector<std::vector<double>> rows_as_double(const std::vector<TypedRow>& rows) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<double> r;
        r.reserve(row.size());
        for (const auto& v : row) r.push_back(as_double(v));
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace egd
