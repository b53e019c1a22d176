#include "egd/gede.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "egd/errors.hpp"

namespace egd {

const char* to_string(CondensedMode mode) {
    switch (mode) {
    case CondensedMode::Stored: return "stored";
    case CondensedMode::OnDemand: return "on-demand";
    case CondensedMode::None: return "none";
    }
    return "?";
}

CondensedMode condensed_mode_from_string(const std::string& s) {
    if (s == "stored") return CondensedMode::Stored;
    if (s == "on-demand" || s == "on_demand") return CondensedMode::OnDemand;
    if (s == "none") return CondensedMode::None;
    throw std::runtime_error("unknown condensed mode '" + s + "'");
}

uint64_t ceil_log2(uint64_t x) {
    if (x <= 1) return 0;
    return static_cast<uint64_t>(std::bit_width(x - 1));
}

uint64_t compressed_size(uint64_t n_b, uint64_t l_b, uint64_t l_d, uint64_t n, uint64_t m,
                         uint64_t s_params) {
    return n_b * l_b + (n + m) * (ceil_log2(n_b) + l_d) + m * ceil_log2(n) + s_params;
}

namespace {

struct WordsHash {
    size_t operator()(const std::vector<uint64_t>& w) const {
        uint64_t h = 14695981039346656037ull;
        for (uint64_t x : w) {
            h ^= x;
            h *= 1099511628211ull;
        }
        return static_cast<size_t>(h);
    }
};

std::vector<uint64_t> project_row(const BitMatrix& bm, size_t row,
                                  const std::vector<uint32_t>& positions) {
    std::vector<uint64_t> words((positions.size() + 63) / 64, 0);
    for (size_t k = 0; k < positions.size(); ++k)
        if (bm.get(row, positions[k])) words[k >> 6] |= uint64_t{1} << (k & 63);
    return words;
}

/// Positions ranked by entropy with deterministic ascending-index tie break.
void sort_by_entropy(std::vector<uint32_t>& positions, const std::vector<double>& h,
                     EntropyOrder order) {
    std::stable_sort(positions.begin(), positions.end(), [&](uint32_t a, uint32_t b) {
        if (h[a] != h[b])
            return order == EntropyOrder::Decreasing ? h[a] > h[b] : h[a] < h[b];
        return a < b;
    });
}

} // namespace

ClusterBits select_cluster_bits(const EntropyProfile& profile, const Schema& schema, uint32_t beta,
                                EntropyOrder order, int32_t exclude_col) {
    // Per-column lists of non-constant positions, most significant first.
    std::vector<std::vector<uint32_t>> column_bits;
    uint32_t pos = 0;
    for (size_t c = 0; c < schema.size(); ++c) {
        const auto& col = schema[c];
        std::vector<uint32_t> bits;
        if (static_cast<int32_t>(c) != exclude_col)
            for (uint32_t k = 0; k < col.bit_width; ++k)
                if (!profile.constant_mask[pos + k]) bits.push_back(pos + k);
        column_bits.push_back(std::move(bits));
        pos += col.bit_width;
    }

    ClusterBits cb;
    cb.beta = beta;
    size_t max_depth = 0;
    for (const auto& bits : column_bits) max_depth = std::max(max_depth, bits.size());
    for (size_t round = 0; round < max_depth && cb.positions.size() < beta; ++round) {
        std::vector<uint32_t> candidates;
        for (const auto& bits : column_bits)
            if (round < bits.size()) candidates.push_back(bits[round]);
        sort_by_entropy(candidates, profile.h, order);
        for (uint32_t p : candidates) {
            if (cb.positions.size() >= beta) break;
            cb.positions.push_back(p);
        }
    }
    return cb;
}

CondensedSet cluster_condense(const BitMatrix& bm, const ClusterBits& cb) {
    size_t n = bm.rows();
    const Schema& schema = bm.schema();
    size_t d = schema.size();

    std::unordered_map<std::vector<uint64_t>, size_t, WordsHash> cluster_of;
    std::vector<std::vector<double>> sums;
    std::vector<uint64_t> counts;
    for (size_t r = 0; r < n; ++r) {
        auto key = project_row(bm, r, cb.positions);
        auto [it, inserted] = cluster_of.try_emplace(std::move(key), sums.size());
        if (inserted) {
            sums.emplace_back(d, 0.0);
            counts.push_back(0);
        }
        size_t j = it->second;
        TypedRow row = decode_record(bm, r);
        for (size_t c = 0; c < d; ++c) sums[j][c] += as_double(row[c]);
        counts[j] += 1;
    }

    CondensedSet cs;
    cs.source_beta = cb.beta;
    cs.weights = counts;
    cs.samples.reserve(sums.size());
    for (size_t j = 0; j < sums.size(); ++j) {
        TypedRow sample(d);
        for (size_t c = 0; c < d; ++c) {
            double mean = sums[j][c] / static_cast<double>(counts[j]);
            switch (schema[c].kind) {
            case ColumnKind::Float32: sample[c] = static_cast<float>(mean); break;
            case ColumnKind::Float64: sample[c] = mean; break;
            case ColumnKind::Int:
            case ColumnKind::Categorical: sample[c] = static_cast<int64_t>(std::llround(mean)); break;
            }
        }
        cs.samples.push_back(std::move(sample));
    }
    return cs;
}

namespace {

/// Materializes bases/records at the chosen base positions (first-occurrence order).
void materialize(CompressedDataset& cd, const BitMatrix& work) {
    size_t rows = work.rows();
    std::vector<uint32_t> dev_positions;
    {
        std::vector<bool> is_base(cd.l_t, false);
        for (uint32_t p : cd.base_positions) is_base[p] = true;
        for (uint32_t p = 0; p < cd.l_t; ++p)
            if (!is_base[p]) dev_positions.push_back(p);
    }
    cd.l_b = static_cast<uint32_t>(cd.base_positions.size());
    cd.l_d = static_cast<uint32_t>(dev_positions.size());

    std::unordered_map<std::vector<uint64_t>, uint64_t, WordsHash> base_id_of;
    cd.bases.clear();
    cd.records.clear();
    cd.records.reserve(rows);
    for (size_t r = 0; r < rows; ++r) {
        auto key = project_row(work, r, cd.base_positions);
        auto [it, inserted] = base_id_of.try_emplace(key, cd.bases.size());
        if (inserted) {
            std::vector<bool> base(cd.l_b);
            for (uint32_t k = 0; k < cd.l_b; ++k) base[k] = work.get(r, cd.base_positions[k]);
            cd.bases.push_back(std::move(base));
        }
        CompressedDataset::Record rec;
        rec.base_id = it->second;
        rec.deviation.resize(cd.l_d);
        for (uint32_t k = 0; k < cd.l_d; ++k) rec.deviation[k] = work.get(r, dev_positions[k]);
        cd.records.push_back(std::move(rec));
    }
    cd.n_b = cd.bases.size();
}

} // namespace

CompressedDataset compress(const BitMatrix& bm, const SearchConfig& cfg) {
    size_t n = bm.rows();
    if (n == 0) throw EmptyDataset();
    uint32_t l_t = bm.record_bits();

    // Entropy is computed over the original records only.
    EntropyProfile profile = bit_entropy(bm);

    CompressedDataset cd;
    cd.schema = bm.schema();
    cd.n = n;
    cd.l_t = l_t;
    cd.beta = cfg.beta;
    cd.tau = cfg.tau;
    cd.condensed_mode = cfg.condensed_mode;

    BitMatrix work = bm;
    CondensedSet cs;
    if (cfg.condensed_mode != CondensedMode::None) {
        ClusterBits cb = select_cluster_bits(profile, bm.schema(), cfg.beta, cfg.cluster_order,
                                             cfg.cluster_exclude_col);
        cd.cluster_positions = cb.positions;
        cs = cluster_condense(bm, cb);
        if (cfg.condensed_mode == CondensedMode::Stored) {
            cd.m = cs.samples.size();
            cd.weights = cs.weights;
            for (const auto& sample : cs.samples)
                work.append_row(encode_record_bits(sample, bm.schema()));
        }
    }
    size_t rows = work.rows();

    // Greedy base growth: start from positions constant across the working matrix.
    std::vector<uint32_t> base_pos;
    std::vector<uint32_t> remaining;
    {
        EntropyProfile work_profile = bit_entropy(work);
        for (uint32_t p = 0; p < l_t; ++p) {
            if (work_profile.constant_mask[p])
                base_pos.push_back(p);
            else
                remaining.push_back(p);
        }
    }
    sort_by_entropy(remaining, profile.h, cfg.base_order);

    uint64_t n_b = 1;
    uint64_t l_b = base_pos.size();
    uint64_t l_d = l_t - l_b;
    uint64_t best = compressed_size(n_b, l_b, l_d, cd.n, cd.m, 0);
    size_t best_extra = 0; // prefix length of `remaining` included in the best base
    uint32_t plateau = 0;

    std::vector<uint32_t> group(rows, 0);
    uint32_t n_groups = 1;
    for (size_t step = 0; step < remaining.size(); ++step) {
        uint32_t p = remaining[step];
        std::unordered_map<uint64_t, uint32_t> refine;
        refine.reserve(n_groups * 2);
        for (size_t r = 0; r < rows; ++r) {
            uint64_t key = (static_cast<uint64_t>(group[r]) << 1) | work.get(r, p);
            auto [it, inserted] = refine.try_emplace(key, static_cast<uint32_t>(refine.size()));
            group[r] = it->second;
        }
        n_groups = static_cast<uint32_t>(refine.size());
        n_b = n_groups;
        ++l_b;
        --l_d;
        uint64_t s = compressed_size(n_b, l_b, l_d, cd.n, cd.m, 0);
        if (s < best) {
            best = s;
            best_extra = step + 1;
            plateau = 0;
        } else {
            ++plateau;
            if (plateau >= cfg.tau || n_b >= cd.n) break;
        }
    }

    cd.base_positions = base_pos;
    cd.base_positions.insert(cd.base_positions.end(), remaining.begin(),
                             remaining.begin() + static_cast<ptrdiff_t>(best_extra));
    std::sort(cd.base_positions.begin(), cd.base_positions.end());
    cd.best_size = best;
    materialize(cd, work);
    return cd;
}

namespace {

std::vector<uint32_t> deviation_positions(const CompressedDataset& cd) {
    std::vector<bool> is_base(cd.l_t, false);
    for (uint32_t p : cd.base_positions) is_base[p] = true;
    std::vector<uint32_t> dev;
    dev.reserve(cd.l_d);
    for (uint32_t p = 0; p < cd.l_t; ++p)
        if (!is_base[p]) dev.push_back(p);
    return dev;
}

std::vector<bool> reassemble_row(const CompressedDataset& cd, size_t index,
                                 const std::vector<uint32_t>& dev_pos) {
    const auto& rec = cd.records[index];
    if (rec.base_id >= cd.n_b) throw CorruptContainer("base id out of range");
    const auto& base = cd.bases[rec.base_id];
    std::vector<bool> bits(cd.l_t);
    for (uint32_t k = 0; k < cd.l_b; ++k) bits[cd.base_positions[k]] = base[k];
    for (uint32_t k = 0; k < cd.l_d; ++k) bits[dev_pos[k]] = rec.deviation[k];
    return bits;
}

} // namespace

void validate(const CompressedDataset& cd) {
    if (cd.l_b + cd.l_d != cd.l_t) throw CorruptContainer("l_b + l_d != l_t");
    if (cd.base_positions.size() != cd.l_b) throw CorruptContainer("base position count != l_b");
    if (!std::is_sorted(cd.base_positions.begin(), cd.base_positions.end()) ||
        std::adjacent_find(cd.base_positions.begin(), cd.base_positions.end()) !=
            cd.base_positions.end())
        throw CorruptContainer("base positions not sorted/distinct");
    if (!cd.base_positions.empty() && cd.base_positions.back() >= cd.l_t)
        throw CorruptContainer("base position out of range");
    if (cd.bases.size() != cd.n_b) throw CorruptContainer("base count != n_b");
    if (cd.records.size() != cd.n + cd.m) throw CorruptContainer("record count != n + m");
    if (cd.weights.size() != cd.m) throw CorruptContainer("weight count != m");
    if (cd.best_size != compressed_size(cd.n_b, cd.l_b, cd.l_d, cd.n, cd.m, 0))
        throw CorruptContainer("best_size disagrees with counters");
    if (record_bits(cd.schema) != cd.l_t) throw CorruptContainer("schema width != l_t");
    std::vector<bool> referenced(cd.n_b, false);
    for (const auto& rec : cd.records) {
        if (rec.base_id >= cd.n_b) throw CorruptContainer("base id out of range");
        if (rec.deviation.size() != cd.l_d) throw CorruptContainer("deviation width != l_d");
        referenced[rec.base_id] = true;
    }
    for (bool r : referenced)
        if (!r) throw CorruptContainer("unreferenced base");
}

BitMatrix decompress(const CompressedDataset& cd) {
    validate(cd);
    auto dev_pos = deviation_positions(cd);
    BitMatrix bm(0, cd.l_t, cd.schema);
    for (size_t r = 0; r < cd.n; ++r) bm.append_row(reassemble_row(cd, r, dev_pos));
    return bm;
}

TypedRow random_access(const CompressedDataset& cd, size_t index) {
    if (index >= cd.n) throw IndexOutOfRange("record " + std::to_string(index));
    auto dev_pos = deviation_positions(cd);
    auto bits = reassemble_row(cd, index, dev_pos);
    BitMatrix one(0, cd.l_t, cd.schema);
    one.append_row(bits);
    return decode_record(one, 0);
}

CondensedSet get_condensed(const CompressedDataset& cd) {
    if (cd.condensed_mode == CondensedMode::None) throw NoCondensedData();
    if (cd.condensed_mode == CondensedMode::Stored) {
        auto dev_pos = deviation_positions(cd);
        BitMatrix tail(0, cd.l_t, cd.schema);
        for (size_t r = cd.n; r < cd.n + cd.m; ++r) tail.append_row(reassemble_row(cd, r, dev_pos));
        CondensedSet cs;
        cs.samples = decode_tabular(tail);
        cs.weights = cd.weights;
        cs.source_beta = cd.beta;
        return cs;
    }
    // On-demand: regenerate from the losslessly restored records.
    BitMatrix restored = decompress(cd);
    ClusterBits cb{cd.cluster_positions, cd.beta};
    return cluster_condense(restored, cb);
}

uint32_t find_beta_for_fraction(const BitMatrix& bm, double target_fraction,
                                int32_t exclude_col) {
    size_t n = bm.rows();
    EntropyProfile profile = bit_entropy(bm);
    uint32_t non_constant = 0;
    for (bool c : profile.constant_mask)
        if (!c) ++non_constant;
    for (uint32_t beta = 0; beta <= non_constant; ++beta) {
        ClusterBits cb = select_cluster_bits(profile, bm.schema(), beta,
                                             EntropyOrder::Decreasing, exclude_col);
        std::unordered_map<std::vector<uint64_t>, size_t, WordsHash> keys;
        for (size_t r = 0; r < n; ++r) keys.try_emplace(project_row(bm, r, cb.positions), keys.size());
        double frac = static_cast<double>(keys.size()) / static_cast<double>(n);
        if (frac >= target_fraction) return beta;
    }
    return non_constant;
}

uint64_t CompressedDataset::params_bits() const {
    // Header, schema, position lists; everything Eq-style accounting leaves out.
    uint64_t bits = 8 * (4 + 1 + 3 * 8 + 5 * 4 + 1 + 8); // magic/version/counters/checksum
    for (const auto& col : schema) bits += 8 * (2 + col.name.size() + 1 + 4 + 8);
    bits += 32 * (base_positions.size() + cluster_positions.size() + 1);
    return bits;
}

} // namespace egd
