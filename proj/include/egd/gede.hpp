#pragma once

#include <cstdint>
#include <vector>

#include "egd/bitmatrix.hpp"
#include "egd/schema.hpp"

namespace egd {

enum class CondensedMode : uint8_t { Stored = 0, OnDemand = 1, None = 2 };

const char* to_string(CondensedMode mode);
CondensedMode condensed_mode_from_string(const std::string& s);

/// Entropy ordering used when ranking candidate bit positions.
enum class EntropyOrder : uint8_t { Decreasing = 0, Increasing = 1 };

/// Bit positions used as the clustering key.
struct ClusterBits {
    std::vector<uint32_t> positions; // distinct, in selection order
    uint32_t beta = 0;               // requested count
};

/// Weighted cluster centroids standing in for the original records.
struct CondensedSet {
    std::vector<TypedRow> samples;
    std::vector<uint64_t> weights; // sums to n
    uint32_t source_beta = 0;
};

struct SearchConfig {
    uint32_t beta = 0;
    uint32_t tau = 16;
    CondensedMode condensed_mode = CondensedMode::Stored;
    // Ablation hooks; the defaults are the intended algorithm.
    EntropyOrder cluster_order = EntropyOrder::Decreasing;
    EntropyOrder base_order = EntropyOrder::Increasing;
    // Bits of this column never become cluster keys. Set it to the training
    // target so cluster membership is never conditioned on the outcome;
    // compression itself stays lossless either way.
    int32_t cluster_exclude_col = -1;
};

struct CompressedDataset {
    std::vector<uint32_t> base_positions;  // sorted, l_b entries
    std::vector<std::vector<bool>> bases;  // n_b bitstrings of l_b bits, first-occurrence order

    struct Record {
        uint64_t base_id = 0;
        std::vector<bool> deviation; // l_d bits, complement positions in increasing order
    };
    std::vector<Record> records; // n + m entries
    std::vector<uint64_t> weights; // m entries

    Schema schema;
    uint64_t n = 0;   // original record count
    uint64_t m = 0;   // physically stored condensed samples
    uint64_t n_b = 0;
    uint32_t l_b = 0;
    uint32_t l_d = 0;
    uint32_t l_t = 0;
    uint64_t best_size = 0; // S* in bits, s_params = 0

    uint32_t beta = 0;
    uint32_t tau = 0;
    CondensedMode condensed_mode = CondensedMode::Stored;
    std::vector<uint32_t> cluster_positions; // enables on-demand regeneration

    /// Header/metadata footprint in bits, reported separately from best_size.
    uint64_t params_bits() const;
};

ClusterBits select_cluster_bits(const EntropyProfile& profile, const Schema& schema, uint32_t beta,
                                EntropyOrder order = EntropyOrder::Decreasing,
                                int32_t exclude_col = -1);

CondensedSet cluster_condense(const BitMatrix& bm, const ClusterBits& cb);

/// Eq-style size accounting; ceil(log2(1)) is 0.
uint64_t compressed_size(uint64_t n_b, uint64_t l_b, uint64_t l_d, uint64_t n, uint64_t m,
                         uint64_t s_params);

uint64_t ceil_log2(uint64_t x);

CompressedDataset compress(const BitMatrix& bm, const SearchConfig& cfg);

/// Reconstructs the n original records, bit-identical to the input matrix.
BitMatrix decompress(const CompressedDataset& cd);

TypedRow random_access(const CompressedDataset& cd, size_t index);

CondensedSet get_condensed(const CompressedDataset& cd);

/// Smallest beta whose cluster count m satisfies m/n >= target_fraction,
/// capped at the number of non-constant positions.
uint32_t find_beta_for_fraction(const BitMatrix& bm, double target_fraction,
                                int32_t exclude_col = -1);

/// Validates stored counters and cross-references; throws CorruptContainer.
void validate(const CompressedDataset& cd);

} // namespace egd
