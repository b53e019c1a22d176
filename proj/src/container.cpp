#include "egd/container.hpp"

#include <cstring>
#include <fstream>

#include "egd/errors.hpp"

namespace egd {

uint64_t fnv1a64(const uint8_t* data, size_t size) {
    uint64_t h = 14695981039346656037ull;
    for (size_t i = 0; i < size; ++i) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

constexpr uint8_t kMagic[4] = {0x45, 0x47, 0x44, 0x31}; // "EGD1"
constexpr uint8_t kVersion = 1;

struct ByteWriter {
    std::vector<uint8_t> out;

    void u8(uint8_t v) { out.push_back(v); }
    void u16(uint16_t v) {
        for (int i = 0; i < 2; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
    void bytes(const void* p, size_t size) {
        const auto* b = static_cast<const uint8_t*>(p);
        out.insert(out.end(), b, b + size);
    }
};

struct ByteReader {
    const std::vector<uint8_t>& in;
    size_t pos = 0;

    void need(size_t size) const {
        if (pos + size > in.size()) throw CorruptContainer("truncated");
    }
    uint8_t u8() {
        need(1);
        return in[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<uint16_t>(in[pos++]) << (8 * i);
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in[pos++]) << (8 * i);
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in[pos++]) << (8 * i);
        return v;
    }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    std::string str(size_t size) {
        need(size);
        std::string s(reinterpret_cast<const char*>(in.data() + pos), size);
        pos += size;
        return s;
    }
};

// MSB-first bit packing within a byte-aligned block.
struct BitWriter {
    std::vector<uint8_t> buf;
    uint32_t nbits = 0;

    void bit(bool b) {
        if (nbits % 8 == 0) buf.push_back(0);
        if (b) buf.back() |= static_cast<uint8_t>(0x80u >> (nbits % 8));
        ++nbits;
    }
    void value(uint64_t v, uint32_t width) {
        for (uint32_t k = 0; k < width; ++k) bit((v >> (width - 1 - k)) & 1u);
    }
};

struct BitReader {
    const uint8_t* data;
    size_t size;
    uint64_t pos = 0;

    bool bit() {
        if (pos >= size * 8) throw CorruptContainer("bit block truncated");
        bool b = (data[pos >> 3] >> (7 - (pos & 7))) & 1u;
        ++pos;
        return b;
    }
    uint64_t value(uint32_t width) {
        uint64_t v = 0;
        for (uint32_t k = 0; k < width; ++k) v = (v << 1) | static_cast<uint64_t>(bit());
        return v;
    }
};

void write_schema(ByteWriter& w, const Schema& schema) {
    w.u32(static_cast<uint32_t>(schema.size()));
    for (const auto& col : schema) {
        w.u16(static_cast<uint16_t>(col.name.size()));
        w.bytes(col.name.data(), col.name.size());
        w.u8(static_cast<uint8_t>(col.kind));
        w.u32(col.bit_width);
        w.i64(col.offset);
    }
}

Schema read_schema(ByteReader& r) {
    Schema schema(r.u32());
    for (auto& col : schema) {
        col.name = r.str(r.u16());
        col.kind = static_cast<ColumnKind>(r.u8());
        col.bit_width = r.u32();
        col.offset = r.i64();
    }
    return schema;
}

} // namespace

std::vector<uint8_t> serialize(const CompressedDataset& cd) {
    ByteWriter w;
    w.bytes(kMagic, 4);
    w.u8(kVersion);
    w.u8(static_cast<uint8_t>(cd.condensed_mode));
    w.u64(cd.n);
    w.u64(cd.m);
    w.u64(cd.n_b);
    w.u32(cd.l_t);
    w.u32(cd.l_b);
    w.u32(cd.l_d);
    w.u32(cd.beta);
    w.u32(cd.tau);
    write_schema(w, cd.schema);
    for (uint32_t p : cd.base_positions) w.u32(p);
    w.u32(static_cast<uint32_t>(cd.cluster_positions.size()));
    for (uint32_t p : cd.cluster_positions) w.u32(p);

    {
        BitWriter bits;
        for (const auto& base : cd.bases)
            for (bool b : base) bits.bit(b);
        w.bytes(bits.buf.data(), bits.buf.size());
    }
    {
        BitWriter bits;
        uint32_t id_bits = static_cast<uint32_t>(ceil_log2(cd.n_b));
        for (const auto& rec : cd.records) {
            bits.value(rec.base_id, id_bits);
            for (bool b : rec.deviation) bits.bit(b);
        }
        w.bytes(bits.buf.data(), bits.buf.size());
    }
    {
        // Weights stored as w-1 in ceil(log2(n)) bits each.
        BitWriter bits;
        uint32_t w_bits = static_cast<uint32_t>(ceil_log2(cd.n));
        for (uint64_t weight : cd.weights) bits.value(weight - 1, w_bits);
        w.bytes(bits.buf.data(), bits.buf.size());
    }
    w.u64(fnv1a64(w.out.data(), w.out.size()));
    return w.out;
}

CompressedDataset deserialize(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw CorruptContainer("bad magic");
    uint64_t stored_sum = 0;
    std::memcpy(&stored_sum, bytes.data() + bytes.size() - 8, 8);
    if (stored_sum != fnv1a64(bytes.data(), bytes.size() - 8))
        throw CorruptContainer("checksum mismatch");

    ByteReader r{bytes};
    r.pos = 4;
    if (r.u8() != kVersion) throw CorruptContainer("unsupported version");
    CompressedDataset cd;
    cd.condensed_mode = static_cast<CondensedMode>(r.u8());
    cd.n = r.u64();
    cd.m = r.u64();
    cd.n_b = r.u64();
    cd.l_t = r.u32();
    cd.l_b = r.u32();
    cd.l_d = r.u32();
    cd.beta = r.u32();
    cd.tau = r.u32();
    cd.schema = read_schema(r);
    cd.base_positions.resize(cd.l_b);
    for (auto& p : cd.base_positions) p = r.u32();
    cd.cluster_positions.resize(r.u32());
    for (auto& p : cd.cluster_positions) p = r.u32();

    size_t base_bytes = (cd.n_b * cd.l_b + 7) / 8;
    r.need(base_bytes);
    {
        BitReader bits{bytes.data() + r.pos, base_bytes};
        cd.bases.resize(cd.n_b);
        for (auto& base : cd.bases) {
            base.resize(cd.l_b);
            for (uint32_t k = 0; k < cd.l_b; ++k) base[k] = bits.bit();
        }
        r.pos += base_bytes;
    }
    uint32_t id_bits = static_cast<uint32_t>(ceil_log2(cd.n_b));
    size_t rec_bytes = ((cd.n + cd.m) * (id_bits + cd.l_d) + 7) / 8;
    r.need(rec_bytes);
    {
        BitReader bits{bytes.data() + r.pos, rec_bytes};
        cd.records.resize(cd.n + cd.m);
        for (auto& rec : cd.records) {
            rec.base_id = bits.value(id_bits);
            rec.deviation.resize(cd.l_d);
            for (uint32_t k = 0; k < cd.l_d; ++k) rec.deviation[k] = bits.bit();
        }
        r.pos += rec_bytes;
    }
    uint32_t w_bits = static_cast<uint32_t>(ceil_log2(cd.n));
    size_t weight_bytes = (cd.m * w_bits + 7) / 8;
    r.need(weight_bytes);
    {
        BitReader bits{bytes.data() + r.pos, weight_bytes};
        cd.weights.resize(cd.m);
        for (auto& weight : cd.weights) weight = bits.value(w_bits) + 1;
        r.pos += weight_bytes;
    }
    cd.best_size = compressed_size(cd.n_b, cd.l_b, cd.l_d, cd.n, cd.m, 0);
    validate(cd);
    return cd;
}

void write_container(const CompressedDataset& cd, const std::string& path) {
    auto bytes = serialize(cd);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("short write to '" + path + "'");
}

CompressedDataset read_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

ContainerReader::ContainerReader(const std::string& path) : path_(path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");

    // The prefix (everything before the records block) is read eagerly; it is
    // parsed with the same byte reader over a buffered copy of that region.
    auto read_exact = [&](size_t size) {
        std::vector<uint8_t> buf(size);
        f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
        if (static_cast<size_t>(f.gcount()) != size) throw CorruptContainer("truncated");
        bytes_read_ += size;
        return buf;
    };

    auto head = read_exact(4 + 1 + 1 + 24 + 20);
    if (std::memcmp(head.data(), kMagic, 4) != 0) throw CorruptContainer("bad magic");
    ByteReader r{head};
    r.pos = 4;
    if (r.u8() != kVersion) throw CorruptContainer("unsupported version");
    r.u8(); // condensed mode, irrelevant for raw record access
    n_ = r.u64();
    m_ = r.u64();
    n_b_ = r.u64();
    l_t_ = r.u32();
    l_b_ = r.u32();
    l_d_ = r.u32();
    r.u32(); // beta
    r.u32(); // tau

    auto col_count_buf = read_exact(4);
    ByteReader cc{col_count_buf};
    uint32_t cols = cc.u32();
    schema_.resize(cols);
    for (auto& col : schema_) {
        auto len_buf = read_exact(2);
        ByteReader lr{len_buf};
        uint16_t len = lr.u16();
        auto body = read_exact(static_cast<size_t>(len) + 1 + 4 + 8);
        ByteReader br{body};
        col.name = br.str(len);
        col.kind = static_cast<ColumnKind>(br.u8());
        col.bit_width = br.u32();
        col.offset = br.i64();
    }

    auto pos_buf = read_exact(static_cast<size_t>(l_b_) * 4);
    ByteReader pr{pos_buf};
    base_positions_.resize(l_b_);
    for (auto& p : base_positions_) p = pr.u32();
    {
        std::vector<bool> is_base(l_t_, false);
        for (uint32_t p : base_positions_) is_base[p] = true;
        for (uint32_t p = 0; p < l_t_; ++p)
            if (!is_base[p]) dev_positions_.push_back(p);
        if (dev_positions_.size() != l_d_) throw CorruptContainer("deviation width mismatch");
    }
    auto cl_count_buf = read_exact(4);
    ByteReader clr{cl_count_buf};
    uint32_t cluster_count = clr.u32();
    read_exact(static_cast<size_t>(cluster_count) * 4); // cluster positions, unused here

    size_t base_bytes = (n_b_ * l_b_ + 7) / 8;
    auto base_buf = read_exact(base_bytes);
    BitReader bits{base_buf.data(), base_buf.size()};
    bases_.resize(n_b_);
    for (auto& base : bases_) {
        base.resize(l_b_);
        for (uint32_t k = 0; k < l_b_; ++k) base[k] = bits.bit();
    }
    id_bits_ = static_cast<uint32_t>(ceil_log2(n_b_));
    records_offset_ = static_cast<uint64_t>(f.tellg());
    prefix_bytes_ = bytes_read_;
}

TypedRow ContainerReader::record(size_t index) {
    if (index >= n_) throw IndexOutOfRange("record " + std::to_string(index));
    uint64_t rec_bits = id_bits_ + l_d_;
    uint64_t bit_lo = index * rec_bits;
    uint64_t byte_lo = bit_lo / 8;
    uint64_t byte_hi = (bit_lo + rec_bits + 7) / 8;
    std::vector<uint8_t> buf(byte_hi - byte_lo);

    std::ifstream f(path_, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path_ + "'");
    f.seekg(static_cast<std::streamoff>(records_offset_ + byte_lo));
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(f.gcount()) != buf.size()) throw CorruptContainer("truncated record");
    bytes_read_ += buf.size();

    BitReader bits{buf.data(), buf.size()};
    bits.pos = bit_lo % 8;
    uint64_t base_id = bits.value(id_bits_);
    if (base_id >= n_b_) throw CorruptContainer("base id out of range");

    BitMatrix one(0, l_t_, schema_);
    std::vector<bool> row(l_t_);
    for (uint32_t k = 0; k < l_b_; ++k) row[base_positions_[k]] = bases_[base_id][k];
    for (uint32_t k = 0; k < l_d_; ++k) row[dev_positions_[k]] = bits.bit();
    one.append_row(row);
    return decode_record(one, 0);
}

} // namespace egd
