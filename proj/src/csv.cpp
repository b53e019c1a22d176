#include "egd/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "egd/errors.hpp"

namespace egd {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

TypedValue parse_value(const std::string& field, const ColumnSchema& col) {
    if (field.empty()) throw SchemaMismatch("missing value in column '" + col.name + "'");
    try {
        size_t used = 0;
        switch (col.kind) {
        case ColumnKind::Float32: {
            float v = std::stof(field, &used);
            if (used != field.size()) throw SchemaMismatch("trailing junk in '" + field + "'");
            return v;
        }
        case ColumnKind::Float64: {
            double v = std::stod(field, &used);
            if (used != field.size()) throw SchemaMismatch("trailing junk in '" + field + "'");
            return v;
        }
        case ColumnKind::Int:
        case ColumnKind::Categorical: {
            int64_t v = std::stoll(field, &used);
            if (used != field.size()) throw SchemaMismatch("trailing junk in '" + field + "'");
            return v;
        }
        }
    } catch (const std::invalid_argument&) {
        throw SchemaMismatch("cannot parse '" + field + "' for column '" + col.name + "'");
    } catch (const std::out_of_range&) {
        throw RangeOverflow("value '" + field + "' out of range for column '" + col.name + "'");
    }
    throw SchemaMismatch("bad column kind");
}

std::string format_value(const TypedValue& v) {
    char buf[40];
    if (const auto* f = std::get_if<float>(&v))
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(*f));
    else if (const auto* d = std::get_if<double>(&v))
        std::snprintf(buf, sizeof buf, "%.17g", *d);
    else
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(std::get<int64_t>(v)));
    return buf;
}

} // namespace

CsvData read_csv(const std::string& path, const std::optional<std::string>& sidecar_path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw SchemaMismatch("empty CSV file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    CsvData data;
    for (const auto& field : split(line, ',')) {
        auto colon = field.rfind(':');
        if (colon == std::string::npos)
            throw SchemaMismatch("header field '" + field + "' is not name:kind");
        ColumnSchema col;
        col.name = field.substr(0, colon);
        col.kind = column_kind_from_string(field.substr(colon + 1));
        data.schema.push_back(std::move(col));
    }

    size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != data.schema.size())
            throw SchemaMismatch("line " + std::to_string(lineno) + " has " +
                                 std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(data.schema.size()));
        TypedRow row;
        row.reserve(fields.size());
        for (size_t c = 0; c < fields.size(); ++c) row.push_back(parse_value(fields[c], data.schema[c]));
        data.rows.push_back(std::move(row));
    }

    if (sidecar_path) {
        Schema override_schema = read_schema_sidecar(*sidecar_path);
        if (override_schema.size() != data.schema.size())
            throw SchemaMismatch("sidecar column count differs from CSV header");
        data.schema = std::move(override_schema);
    } else {
        fit_schema(data.schema, data.rows);
    }
    return data;
}

void write_csv(const std::string& path, const Schema& schema, const std::vector<TypedRow>& rows) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    for (size_t c = 0; c < schema.size(); ++c)
        f << (c ? "," : "") << schema[c].name << ':' << to_string(schema[c].kind);
    f << '\n';
    for (const auto& row : rows) {
        if (row.size() != schema.size()) throw SchemaMismatch("row arity differs from schema");
        for (size_t c = 0; c < row.size(); ++c) f << (c ? "," : "") << format_value(row[c]);
        f << '\n';
    }
    if (!f) throw IoError("short write to '" + path + "'");
}

Schema read_schema_sidecar(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "'");
    Schema schema;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        ColumnSchema col;
        std::string kind;
        long long width = 0, offset = 0;
        if (!(ss >> col.name >> kind >> width >> offset))
            throw SchemaMismatch("bad sidecar line: " + line);
        col.kind = column_kind_from_string(kind);
        col.bit_width = static_cast<uint32_t>(width);
        col.offset = offset;
        schema.push_back(std::move(col));
    }
    return schema;
}

void write_schema_sidecar(const std::string& path, const Schema& schema) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& col : schema)
        f << col.name << ' ' << to_string(col.kind) << ' ' << col.bit_width << ' ' << col.offset
          << '\n';
}

} // namespace egd
