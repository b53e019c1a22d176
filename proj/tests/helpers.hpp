#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "egd/bitmatrix.hpp"
#include "egd/gede.hpp"
#include "egd/schema.hpp"

namespace egd::testing {

/// Random mixed-kind schema with d columns.
inline Schema random_schema(std::mt19937_64& rng, size_t d) {
    Schema schema(d);
    std::uniform_int_distribution<int> kind_pick(0, 3);
    for (size_t c = 0; c < d; ++c) {
        schema[c].name = "c" + std::to_string(c);
        schema[c].kind = static_cast<ColumnKind>(kind_pick(rng));
    }
    return schema;
}

/// Rows with deliberately limited distinct values per column, so clustering
/// and deduplication have something to find.
inline std::vector<TypedRow> random_rows(std::mt19937_64& rng, const Schema& schema, size_t n,
                                         int distinct_per_col = 8) {
    std::vector<TypedRow> rows(n);
    std::uniform_int_distribution<int> pick(0, distinct_per_col - 1);
    std::uniform_real_distribution<double> real(-100.0, 100.0);
    std::uniform_int_distribution<int64_t> integer(-1000, 1000);

    std::vector<std::vector<TypedValue>> pools(schema.size());
    for (size_t c = 0; c < schema.size(); ++c)
        for (int v = 0; v < distinct_per_col; ++v) {
            switch (schema[c].kind) {
            case ColumnKind::Float32: pools[c].emplace_back(static_cast<float>(real(rng))); break;
            case ColumnKind::Float64: pools[c].emplace_back(real(rng)); break;
            case ColumnKind::Int:
            case ColumnKind::Categorical: pools[c].emplace_back(integer(rng)); break;
            }
        }
    for (size_t r = 0; r < n; ++r) {
        TypedRow row(schema.size());
        for (size_t c = 0; c < schema.size(); ++c) row[c] = pools[c][static_cast<size_t>(pick(rng))];
        rows[r] = std::move(row);
    }
    return rows;
}

inline BitMatrix random_bitmatrix(std::mt19937_64& rng, size_t n, size_t d,
                                  int distinct_per_col = 8) {
    Schema schema = random_schema(rng, d);
    auto rows = random_rows(rng, schema, n, distinct_per_col);
    fit_schema(schema, rows);
    return encode_tabular(rows, schema);
}

inline SearchConfig random_config(std::mt19937_64& rng) {
    SearchConfig cfg;
    cfg.beta = static_cast<uint32_t>(rng() % 24);
    cfg.tau = 1 + static_cast<uint32_t>(rng() % 32);
    switch (rng() % 3) {
    case 0: cfg.condensed_mode = CondensedMode::Stored; break;
    case 1: cfg.condensed_mode = CondensedMode::OnDemand; break;
    default: cfg.condensed_mode = CondensedMode::None; break;
    }
    return cfg;
}

} // namespace egd::testing
