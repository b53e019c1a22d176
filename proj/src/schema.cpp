#include "egd/schema.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "egd/errors.hpp"

namespace egd {

const char* to_string(ColumnKind kind) {
    switch (kind) {
    case ColumnKind::Float32: return "float32";
    case ColumnKind::Float64: return "float64";
    case ColumnKind::Int: return "int";
    case ColumnKind::Categorical: return "categorical";
    }
    return "?";
}

ColumnKind column_kind_from_string(const std::string& s) {
    if (s == "float32") return ColumnKind::Float32;
    if (s == "float64") return ColumnKind::Float64;
    if (s == "int") return ColumnKind::Int;
    if (s == "categorical") return ColumnKind::Categorical;
    throw SchemaMismatch("unknown column kind '" + s + "'");
}

uint32_t record_bits(const Schema& schema) {
    uint32_t total = 0;
    for (const auto& col : schema) total += col.bit_width;
    return total;
}

double as_double(const TypedValue& v) {
    return std::visit([](auto x) { return static_cast<double>(x); }, v);
}

namespace {

uint32_t bits_for_range(uint64_t range) {
    // width covering values 0..range, at least 1 bit
    uint32_t w = 1;
    while (w < 64 && (range >> w) != 0) ++w;
    return w;
}

} // namespace

void fit_schema(Schema& schema, const std::vector<TypedRow>& rows) {
    for (size_t c = 0; c < schema.size(); ++c) {
        auto& col = schema[c];
        switch (col.kind) {
        case ColumnKind::Float32:
            col.bit_width = 32;
            col.offset = 0;
            break;
        case ColumnKind::Float64:
            col.bit_width = 64;
            col.offset = 0;
            break;
        case ColumnKind::Int:
        case ColumnKind::Categorical: {
            int64_t lo = std::numeric_limits<int64_t>::max();
            int64_t hi = std::numeric_limits<int64_t>::min();
            for (const auto& row : rows) {
                if (c >= row.size()) throw SchemaMismatch("row shorter than schema");
                const auto* p = std::get_if<int64_t>(&row[c]);
                if (!p) throw SchemaMismatch("column '" + col.name + "' expects integer values");
                lo = std::min(lo, *p);
                hi = std::max(hi, *p);
            }
            if (rows.empty()) { lo = 0; hi = 0; }
            col.offset = lo;
            col.bit_width = bits_for_range(static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo));
            break;
        }
        }
    }
}

} // namespace egd
