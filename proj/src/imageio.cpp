#include "egd/imageio.hpp"

#include <fstream>

#include "egd/errors.hpp"

namespace egd::img {

namespace {

uint32_t read_be32(std::istream& f) {
    uint8_t b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw IoError("truncated IDX header");
    return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) | (uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& f, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v >> 24), static_cast<uint8_t>(v >> 16),
                    static_cast<uint8_t>(v >> 8), static_cast<uint8_t>(v)};
    f.write(reinterpret_cast<char*>(b), 4);
}

} // namespace

std::vector<ImageTensor> read_idx_images(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    uint32_t magic = read_be32(f);
    if ((magic & 0xFFFFFF00u) != 0x00000800u) throw IoError("not a ubyte IDX file");
    uint32_t dims = magic & 0xFFu;
    if (dims != 3 && dims != 4) throw IoError("IDX image file must have 3 or 4 dimensions");
    uint32_t count = read_be32(f);
    uint32_t h = read_be32(f);
    uint32_t w = read_be32(f);
    uint32_t c = dims == 4 ? read_be32(f) : 1;
    if (c != 1 && c != 3) throw IoError("IDX channel count must be 1 or 3");

    std::vector<ImageTensor> images;
    images.reserve(count);
    size_t plane = static_cast<size_t>(h) * w;
    std::vector<uint8_t> buf(plane * c);
    for (uint32_t i = 0; i < count; ++i) {
        f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!f) throw IoError("truncated IDX data");
        ImageTensor img = ImageTensor::zeros(
            h, w, c, c == 3 ? ImageDomain::SpatialRgb : ImageDomain::SpatialGray);
        // IDX stores interleaved samples; the tensor is channel-major.
        for (size_t p = 0; p < plane; ++p)
            for (uint32_t ch = 0; ch < c; ++ch) img.data[ch * plane + p] = buf[p * c + ch];
        images.push_back(std::move(img));
    }
    return images;
}

std::vector<int64_t> read_idx_labels(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    uint32_t magic = read_be32(f);
    if (magic != 0x00000801u) throw IoError("not an IDX label file");
    uint32_t count = read_be32(f);
    std::vector<uint8_t> buf(count);
    f.read(reinterpret_cast<char*>(buf.data()), count);
    if (!f) throw IoError("truncated IDX labels");
    return {buf.begin(), buf.end()};
}

void write_idx_images(const std::string& path, const std::vector<ImageTensor>& images) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    uint32_t h = images.empty() ? 0 : images[0].height;
    uint32_t w = images.empty() ? 0 : images[0].width;
    uint32_t c = images.empty() ? 1 : images[0].channels;
    write_be32(f, c == 1 ? 0x00000803u : 0x00000804u);
    write_be32(f, static_cast<uint32_t>(images.size()));
    write_be32(f, h);
    write_be32(f, w);
    if (c != 1) write_be32(f, c);
    size_t plane = static_cast<size_t>(h) * w;
    std::vector<uint8_t> buf(plane * c);
    for (const auto& img : images) {
        if (img.height != h || img.width != w || img.channels != c)
            throw ShapeMismatch("images differ in shape");
        for (size_t p = 0; p < plane; ++p)
            for (uint32_t ch = 0; ch < c; ++ch)
                buf[p * c + ch] = static_cast<uint8_t>(img.data[ch * plane + p]);
        f.write(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!f) throw IoError("short write to '" + path + "'");
}

void write_idx_labels(const std::string& path, const std::vector<int64_t>& labels) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    write_be32(f, 0x00000801u);
    write_be32(f, static_cast<uint32_t>(labels.size()));
    for (int64_t l : labels) f.put(static_cast<char>(l));
    if (!f) throw IoError("short write to '" + path + "'");
}

ImageTensor read_pnm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::string magic;
    f >> magic;
    if (magic != "P5" && magic != "P6") throw IoError("unsupported PNM magic '" + magic + "'");
    auto next_int = [&] {
        int v;
        while (f >> std::ws && f.peek() == '#') f.ignore(1 << 20, '\n');
        if (!(f >> v)) throw IoError("bad PNM header");
        return v;
    };
    int w = next_int(), h = next_int(), maxval = next_int();
    if (maxval != 255) throw IoError("PNM maxval must be 255");
    f.get(); // single whitespace after header
    uint32_t c = magic == "P6" ? 3 : 1;
    ImageTensor img = ImageTensor::zeros(static_cast<uint32_t>(h), static_cast<uint32_t>(w), c,
                                         c == 3 ? ImageDomain::SpatialRgb : ImageDomain::SpatialGray);
    size_t plane = static_cast<size_t>(h) * w;
    std::vector<uint8_t> buf(plane * c);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("truncated PNM data");
    for (size_t p = 0; p < plane; ++p)
        for (uint32_t ch = 0; ch < c; ++ch) img.data[ch * plane + p] = buf[p * c + ch];
    return img;
}

void write_pnm(const std::string& path, const ImageTensor& img) {
    if (img.domain != ImageDomain::SpatialRgb && img.domain != ImageDomain::SpatialGray)
        throw WrongDomain("PNM output requires a spatial image");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << (img.channels == 3 ? "P6" : "P5") << '\n'
      << img.width << ' ' << img.height << "\n255\n";
    size_t plane = static_cast<size_t>(img.height) * img.width;
    std::vector<uint8_t> buf(plane * img.channels);
    for (size_t p = 0; p < plane; ++p)
        for (uint32_t ch = 0; ch < img.channels; ++ch)
            buf[p * img.channels + ch] = static_cast<uint8_t>(img.data[ch * plane + p]);
    f.write(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("short write to '" + path + "'");
}

} // namespace egd::img
