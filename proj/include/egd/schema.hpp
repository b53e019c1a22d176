#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace egd {

enum class ColumnKind : uint8_t { Float32 = 0, Float64 = 1, Int = 2, Categorical = 3 };

const char* to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& s);

/// One typed cell of a tabular record.
using TypedValue = std::variant<float, double, int64_t>;
using TypedRow = std::vector<TypedValue>;

/// Layout of one column inside a fixed-width binary record.
struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::Float64;
    uint32_t bit_width = 64; // 32 for Float32, 64 for Float64, minimal covering width otherwise
    int64_t offset = 0;      // subtracted before unsigned encoding (Int/Categorical only)

    bool operator==(const ColumnSchema&) const = default;
};

using Schema = std::vector<ColumnSchema>;

/// Total bits per record under this schema.
uint32_t record_bits(const Schema& schema);

/// Numeric view of a typed value, used by centroids and model training.
double as_double(const TypedValue& v);

/// Infers offset and minimal bit width for Int/Categorical columns from data.
/// Float widths are fixed by the kind. Column kinds and names must already be set.
void fit_schema(Schema& schema, const std::vector<TypedRow>& rows);

} // namespace egd
