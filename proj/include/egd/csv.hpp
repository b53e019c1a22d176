#pragma once

#include <optional>
#include <string>
#include <vector>

#include "egd/schema.hpp"

namespace egd {

struct CsvData {
    Schema schema;
    std::vector<TypedRow> rows;
};

/// Reads a typed CSV: header line of `name:kind` per column, typed values below.
/// Int/categorical offsets and widths are inferred from the data unless a
/// sidecar schema overrides them. Missing values are a hard error.
CsvData read_csv(const std::string& path,
                 const std::optional<std::string>& sidecar_path = std::nullopt);

void write_csv(const std::string& path, const Schema& schema, const std::vector<TypedRow>& rows);

/// Sidecar format: one line per column, `name kind bit_width offset`.
Schema read_schema_sidecar(const std::string& path);
void write_schema_sidecar(const std::string& path, const Schema& schema);

} // namespace egd
