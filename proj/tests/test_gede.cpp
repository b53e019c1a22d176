#include <doctest.h>

#include <algorithm>
#include <bit>
#include <random>
#include <set>
#include <string>

#include "egd/bitmatrix.hpp"
#include "egd/errors.hpp"
#include "egd/gede.hpp"
#include "helpers.hpp"

using namespace egd;

namespace {

Schema int_schema(std::initializer_list<uint32_t> widths) {
    Schema s;
    uint32_t i = 0;
    for (uint32_t w : widths) s.push_back({"c" + std::to_string(i++), ColumnKind::Int, w, 0});
    return s;
}

// Brute-force distinct projections of the matrix onto `positions`.
uint64_t distinct_projections(const BitMatrix& bm, const std::vector<uint32_t>& positions) {
    std::set<std::string> keys;
    for (size_t r = 0; r < bm.rows(); ++r) {
        std::string k(positions.size(), '0');
        for (size_t j = 0; j < positions.size(); ++j) k[j] = bm.get(r, positions[j]) ? '1' : '0';
        keys.insert(std::move(k));
    }
    return keys.size();
}

uint64_t pattern_of(const TypedValue& v) {
    if (auto* p = std::get_if<float>(&v)) return std::bit_cast<uint32_t>(*p);
    if (auto* p = std::get_if<double>(&v)) return std::bit_cast<uint64_t>(*p);
    return static_cast<uint64_t>(std::get<int64_t>(v));
}

} // namespace

TEST_CASE("ceil_log2 with ceil(log2(1)) = 0") {
    CHECK(ceil_log2(1) == 0);
    CHECK(ceil_log2(2) == 1);
    CHECK(ceil_log2(3) == 2);
    CHECK(ceil_log2(4) == 2);
    CHECK(ceil_log2(5) == 3);
    CHECK(ceil_log2(1024) == 10);
    CHECK(ceil_log2(1025) == 11);
}

TEST_CASE("compressed_size term-by-term oracles") {
    // n_b*l_b + (n+m)(ceil_log2(n_b) + l_d) + m*ceil_log2(n) + s_params
    CHECK(compressed_size(1, 67, 0, 6, 0, 0) == 67);
    CHECK(compressed_size(1, 5, 0, 7, 3, 0) == 5 + 0 + 3 * 3);
    CHECK(compressed_size(2, 8, 8, 100, 0, 0) == 16 + 100 * 9);
    CHECK(compressed_size(4, 10, 20, 30, 5, 7) == 40 + 35 * 22 + 5 * 5 + 7);
}

TEST_CASE("select_cluster_bits walks columns round by round, sorted by entropy") {
    Schema schema = int_schema({2, 2, 1});
    EntropyProfile prof;
    prof.h = {0.9, 0.3, 0.2, 0.7, 0.5};
    prof.ones_count = {1, 1, 1, 1, 1};
    prof.constant_mask = {false, false, false, false, false};

    CHECK(select_cluster_bits(prof, schema, 0).positions.empty());
    // round 1 candidates are the MSBs {0,2,4}: decreasing entropy -> 0, 4, 2
    CHECK(select_cluster_bits(prof, schema, 2).positions == std::vector<uint32_t>{0, 4});
    CHECK(select_cluster_bits(prof, schema, 3).positions == std::vector<uint32_t>{0, 4, 2});
    // round 2 candidates {1,3} -> 3, 1
    CHECK(select_cluster_bits(prof, schema, 4).positions == std::vector<uint32_t>{0, 4, 2, 3});
    // beta beyond the non-constant count caps out
    CHECK(select_cluster_bits(prof, schema, 10).positions ==
          std::vector<uint32_t>{0, 4, 2, 3, 1});
    // increasing order flips the ranking inside each round
    CHECK(select_cluster_bits(prof, schema, 2, EntropyOrder::Increasing).positions ==
          std::vector<uint32_t>{2, 4});

    SUBCASE("constant bits are skipped and the next column bit is promoted") {
        prof.constant_mask[0] = true;
        // col 0 now contributes bit 1 (h=0.3) in round 1: {1,2,4} -> 4, 1, 2
        CHECK(select_cluster_bits(prof, schema, 3).positions == std::vector<uint32_t>{4, 1, 2});
    }

    SUBCASE("entropy ties break toward the lower position") {
        prof.h = {0.5, 0.5, 0.5, 0.5, 0.5};
        CHECK(select_cluster_bits(prof, schema, 3).positions == std::vector<uint32_t>{0, 2, 4});
    }
}

TEST_CASE("cluster_condense computes weighted centroids") {
    SUBCASE("beta 0 collapses everything into one mean sample") {
        Schema schema{{"x", ColumnKind::Float64, 64, 0}};
        auto bm = encode_tabular({{TypedValue{1.0}}, {TypedValue{3.0}}}, schema);
        auto cs = cluster_condense(bm, ClusterBits{{}, 0});
        REQUIRE(cs.samples.size() == 1);
        CHECK(cs.weights == std::vector<uint64_t>{2});
        CHECK(std::get<double>(cs.samples[0][0]) == 2.0);
    }

    SUBCASE("projection key separates clusters; integer centroids round") {
        Schema schema = int_schema({2});
        std::vector<TypedRow> rows;
        for (int64_t v : {0, 0, 1, 3}) rows.push_back({TypedValue{v}});
        auto bm = encode_tabular(rows, schema);
        // cluster on the MSB (position 0): {0,0,1} vs {3}
        auto cs = cluster_condense(bm, ClusterBits{{0}, 1});
        REQUIRE(cs.samples.size() == 2);
        CHECK(cs.weights == std::vector<uint64_t>{3, 1});
        CHECK(std::get<int64_t>(cs.samples[0][0]) == 0); // llround(1/3)
        CHECK(std::get<int64_t>(cs.samples[1][0]) == 3);
    }

    SUBCASE("enough bits make every distinct row a singleton cluster") {
        std::mt19937_64 rng(3);
        Schema schema = int_schema({6});
        std::vector<TypedRow> rows;
        for (int64_t v = 0; v < 40; ++v) rows.push_back({TypedValue{v}});
        auto bm = encode_tabular(rows, schema);
        auto cs = cluster_condense(bm, ClusterBits{{0, 1, 2, 3, 4, 5}, 6});
        REQUIRE(cs.samples.size() == 40);
        for (uint64_t w : cs.weights) CHECK(w == 1);
        for (int64_t v = 0; v < 40; ++v) CHECK(std::get<int64_t>(cs.samples[static_cast<size_t>(v)][0]) == v);
    }
}

TEST_CASE("weights always sum to n") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        BitMatrix bm = egd::testing::random_bitmatrix(rng, 1 + rng() % 120, 1 + rng() % 5);
        auto prof = bit_entropy(bm);
        auto cb = select_cluster_bits(prof, bm.schema(), static_cast<uint32_t>(rng() % 16));
        auto cs = cluster_condense(bm, cb);
        uint64_t total = 0;
        for (uint64_t w : cs.weights) total += w;
        CHECK(total == bm.rows());
    }
}

TEST_CASE("identical records collapse to a single base") {
    Schema schema{{"i", ColumnKind::Int, 3, 0}, {"x", ColumnKind::Float64, 64, 0}};
    std::vector<TypedRow> rows(6, TypedRow{TypedValue{int64_t{5}}, TypedValue{1.5}});
    auto bm = encode_tabular(rows, schema);

    SearchConfig cfg;
    cfg.condensed_mode = CondensedMode::None;
    auto cd = compress(bm, cfg);
    CHECK(cd.n_b == 1);
    CHECK(cd.l_b == 67);
    CHECK(cd.l_d == 0);
    CHECK(cd.m == 0);
    CHECK(cd.best_size == 67);
    CHECK(decompress(cd) == bm);

    cfg.condensed_mode = CondensedMode::Stored;
    cfg.beta = 0;
    auto cds = compress(bm, cfg);
    CHECK(cds.m == 1);
    CHECK(cds.n_b == 1);
    CHECK(cds.l_d == 0);
    // l_t + (n+m)*0 + m*ceil_log2(n)
    CHECK(cds.best_size == 67 + 1 * ceil_log2(6));
    CHECK(decompress(cds) == bm);
}

TEST_CASE("compress/decompress round trip over fuzzed datasets and configs") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        size_t n = 1 + rng() % 150;
        size_t d = 1 + rng() % 5;
        BitMatrix bm = egd::testing::random_bitmatrix(rng, n, d, 2 + static_cast<int>(rng() % 10));
        SearchConfig cfg = egd::testing::random_config(rng);
        auto cd = compress(bm, cfg);
        CHECK_NOTHROW(validate(cd));
        CHECK(decompress(cd) == bm);
        CHECK(cd.best_size == compressed_size(cd.n_b, cd.l_b, cd.l_d, cd.n, cd.m, 0));
        if (cfg.condensed_mode == CondensedMode::Stored) {
            uint64_t total = 0;
            for (uint64_t w : cd.weights) total += w;
            CHECK(total == n);
        }
        // spot-check random access against full decode
        auto rows = decode_tabular(decompress(cd));
        for (int k = 0; k < 5; ++k) {
            size_t i = rng() % n;
            auto row = random_access(cd, i);
            REQUIRE(row.size() == rows[i].size());
            for (size_t c = 0; c < row.size(); ++c) CHECK(pattern_of(row[c]) == pattern_of(rows[i][c]));
        }
        CHECK_THROWS_AS(random_access(cd, n), IndexOutOfRange);
    }
}

TEST_CASE("best_size is the minimum over the visited entropy-ordered prefixes") {
    std::mt19937_64 rng(5150);
    for (int trial = 0; trial < 25; ++trial) {
        size_t n = 2 + rng() % 100;
        BitMatrix bm = egd::testing::random_bitmatrix(rng, n, 1 + rng() % 4, 2 + static_cast<int>(rng() % 6));
        SearchConfig cfg;
        cfg.condensed_mode = CondensedMode::None;
        cfg.tau = 1 + static_cast<uint32_t>(rng() % 20);
        auto cd = compress(bm, cfg);

        // independent re-walk of the search schedule
        auto prof = bit_entropy(bm);
        std::vector<uint32_t> constants, remaining;
        for (uint32_t p = 0; p < bm.record_bits(); ++p)
            (prof.constant_mask[p] ? constants : remaining).push_back(p);
        std::stable_sort(remaining.begin(), remaining.end(), [&](uint32_t a, uint32_t b) {
            if (prof.h[a] != prof.h[b]) return prof.h[a] < prof.h[b];
            return a < b;
        });

        std::vector<uint32_t> pos = constants;
        uint64_t best = compressed_size(1, pos.size(), bm.record_bits() - pos.size(), n, 0, 0);
        size_t best_len = pos.size();
        uint32_t plateau = 0;
        for (uint32_t p : remaining) {
            pos.push_back(p);
            uint64_t n_b = distinct_projections(bm, pos);
            uint64_t s = compressed_size(n_b, pos.size(), bm.record_bits() - pos.size(), n, 0, 0);
            if (s < best) {
                best = s;
                best_len = pos.size();
                plateau = 0;
            } else if (++plateau >= cfg.tau || n_b >= n) {
                break;
            }
        }
        CHECK(cd.best_size == best);
        CHECK(cd.base_positions.size() == best_len);
        CHECK(cd.n_b == distinct_projections(bm, cd.base_positions));
    }
}

TEST_CASE("appending a duplicate record never increases n_b for fixed base positions") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        BitMatrix bm = egd::testing::random_bitmatrix(rng, 2 + rng() % 60, 1 + rng() % 4);
        SearchConfig cfg;
        cfg.condensed_mode = CondensedMode::None;
        auto cd = compress(bm, cfg);
        uint64_t before = distinct_projections(bm, cd.base_positions);
        auto rows = decode_tabular(bm);
        rows.push_back(rows[rng() % rows.size()]);
        uint64_t after = distinct_projections(encode_tabular(rows, bm.schema()), cd.base_positions);
        CHECK(after == before);
    }
}

TEST_CASE("stored and on-demand condensed sets agree bit for bit") {
    std::mt19937_64 rng(88);
    for (int trial = 0; trial < 15; ++trial) {
        BitMatrix bm = egd::testing::random_bitmatrix(rng, 3 + rng() % 80, 1 + rng() % 4);
        SearchConfig cfg;
        cfg.beta = static_cast<uint32_t>(rng() % 10);
        cfg.condensed_mode = CondensedMode::Stored;
        auto stored = compress(bm, cfg);
        cfg.condensed_mode = CondensedMode::OnDemand;
        auto on_demand = compress(bm, cfg);
        CHECK(on_demand.m == 0);
        CHECK(on_demand.weights.empty());

        auto a = get_condensed(stored);
        auto b = get_condensed(on_demand);
        REQUIRE(a.samples.size() == b.samples.size());
        CHECK(a.weights == b.weights);
        for (size_t j = 0; j < a.samples.size(); ++j)
            for (size_t c = 0; c < a.samples[j].size(); ++c)
                CHECK(pattern_of(a.samples[j][c]) == pattern_of(b.samples[j][c]));

        cfg.condensed_mode = CondensedMode::None;
        CHECK_THROWS_AS(get_condensed(compress(bm, cfg)), NoCondensedData);
    }
}

TEST_CASE("redundant data compresses below the raw footprint") {
    std::mt19937_64 rng(4);
    Schema schema = int_schema({8, 8, 8});
    std::vector<TypedRow> pool;
    for (int j = 0; j < 4; ++j)
        pool.push_back({TypedValue{static_cast<int64_t>(rng() % 256)},
                        TypedValue{static_cast<int64_t>(rng() % 256)},
                        TypedValue{static_cast<int64_t>(rng() % 256)}});
    std::vector<TypedRow> rows;
    for (int r = 0; r < 500; ++r) rows.push_back(pool[rng() % pool.size()]);
    auto bm = encode_tabular(rows, schema);
    SearchConfig cfg;
    cfg.condensed_mode = CondensedMode::None;
    auto cd = compress(bm, cfg);
    CHECK(cd.best_size < 500ull * bm.record_bits() / 4);
    CHECK(decompress(cd) == bm);
}

TEST_CASE("increasing-entropy base order beats decreasing on deduplicable data") {
    std::mt19937_64 rng(12);
    Schema schema = int_schema({8, 8});
    std::vector<TypedRow> rows;
    // high byte: rare second value -> correlated low-entropy bits; low byte uniform
    for (int r = 0; r < 400; ++r)
        rows.push_back({TypedValue{static_cast<int64_t>(rng() % 10 == 0 ? 170 : 0)},
                        TypedValue{static_cast<int64_t>(rng() % 256)}});
    auto bm = encode_tabular(rows, schema);
    SearchConfig cfg;
    cfg.condensed_mode = CondensedMode::None;
    cfg.tau = 8;
    auto inc = compress(bm, cfg);
    cfg.base_order = EntropyOrder::Decreasing;
    auto dec = compress(bm, cfg);
    CHECK(inc.best_size < dec.best_size);
    CHECK(decompress(dec) == bm);
}

TEST_CASE("find_beta_for_fraction") {
    Schema schema = int_schema({4});
    std::vector<TypedRow> rows;
    for (int64_t v = 0; v < 16; ++v) rows.push_back({TypedValue{v}});
    auto bm = encode_tabular(rows, schema);

    // all rows distinct: beta 4 is the first to reach fraction 1.0
    CHECK(find_beta_for_fraction(bm, 1.0) == 4);
    // just above 1/n: the MSB alone already yields 2 clusters
    uint32_t beta = find_beta_for_fraction(bm, 1.5 / 16.0);
    CHECK(beta == 1);
    // fraction 0 is satisfied with no bits at all
    CHECK(find_beta_for_fraction(bm, 0.0) == 0);

    // unreachable fractions cap at the non-constant position count
    std::vector<TypedRow> dup(8, TypedRow{TypedValue{int64_t{9}}});
    auto bmd = encode_tabular(dup, schema);
    CHECK(find_beta_for_fraction(bmd, 0.5) == 0);
}

TEST_CASE("validate rejects tampered datasets") {
    std::mt19937_64 rng(2);
    BitMatrix bm = egd::testing::random_bitmatrix(rng, 50, 3);
    SearchConfig cfg;
    auto cd = compress(bm, cfg);

    auto broken = cd;
    broken.best_size += 1;
    CHECK_THROWS_AS(validate(broken), CorruptContainer);

    broken = cd;
    broken.records[0].base_id = broken.n_b;
    CHECK_THROWS_AS(validate(broken), CorruptContainer);

    broken = cd;
    broken.records.pop_back();
    CHECK_THROWS_AS(validate(broken), CorruptContainer);

    broken = cd;
    if (!broken.base_positions.empty()) {
        std::reverse(broken.base_positions.begin(), broken.base_positions.end());
        if (broken.base_positions.size() > 1) CHECK_THROWS_AS(validate(broken), CorruptContainer);
    }

    CHECK_THROWS_AS(compress(BitMatrix(0, 8, int_schema({8})), cfg), EmptyDataset);
}

TEST_CASE("an excluded column contributes no cluster keys") {
    std::mt19937_64 rng(91);
    BitMatrix bm = egd::testing::random_bitmatrix(rng, 400, 4, 12);
    const Schema& schema = bm.schema();
    auto profile = bit_entropy(bm);

    for (int32_t excluded = 0; excluded < 4; ++excluded) {
        uint32_t lo = 0;
        for (int32_t c = 0; c < excluded; ++c) lo += schema[static_cast<size_t>(c)].bit_width;
        uint32_t hi = lo + schema[static_cast<size_t>(excluded)].bit_width;

        auto cb = select_cluster_bits(profile, schema, 8, EntropyOrder::Decreasing, excluded);
        for (uint32_t p : cb.positions) CHECK((p < lo || p >= hi));
    }

    // compress threads the exclusion through to the stored cluster positions
    SearchConfig cfg;
    cfg.beta = 6;
    cfg.condensed_mode = CondensedMode::Stored;
    cfg.cluster_exclude_col = 0;
    auto cd = compress(bm, cfg);
    uint32_t w0 = schema[0].bit_width;
    for (uint32_t p : cd.cluster_positions) CHECK(p >= w0);
    CHECK(decompress(cd) == bm);
}
