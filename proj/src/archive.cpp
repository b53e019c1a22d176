#include "egd/archive.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "egd/bitmatrix.hpp"
#include "egd/container.hpp"
#include "egd/errors.hpp"

namespace egd::img {

namespace fs = std::filesystem;

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace

KeyedRng::KeyedRng(uint64_t seed, uint64_t epoch, uint64_t stream)
    : key_(splitmix64(seed ^ splitmix64(epoch ^ splitmix64(stream)))) {}

uint64_t KeyedRng::next() { return splitmix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

uint64_t KeyedRng::below(uint64_t bound) {
    // rejection sampling to avoid modulo bias
    uint64_t limit = bound * (UINT64_MAX / bound);
    uint64_t v;
    do {
        v = next();
    } while (v >= limit);
    return v % bound;
}

TypedRow flatten_image(const ImageTensor& img) {
    TypedRow row;
    row.reserve(img.data.size());
    for (int32_t v : img.data) row.emplace_back(static_cast<int64_t>(v));
    return row;
}

ImageTensor apply_transforms(const ImageTensor& img, const ClasswiseArchive& archive) {
    ImageTensor out = img;
    for (const auto& tag : archive.transform_chain) {
        if (tag == "ycbcr")
            out = rgb_to_ycbcr(out);
        else if (tag == "dct")
            out = dct_forward(out, archive.coeff_scale);
        else
            throw std::runtime_error("unknown transform tag '" + tag + "'");
    }
    return out;
}

ImageTensor invert_transforms(const ImageTensor& img, const ClasswiseArchive& archive) {
    ImageTensor out = img;
    for (auto it = archive.transform_chain.rbegin(); it != archive.transform_chain.rend(); ++it) {
        if (*it == "dct") {
            ImageDomain spatial = archive.channels == 3 ? ImageDomain::YCbCr : ImageDomain::SpatialGray;
            // when no color transform precedes the DCT, invert straight to RGB/gray
            bool has_ycbcr = false;
            for (const auto& t : archive.transform_chain) has_ycbcr |= (t == "ycbcr");
            if (!has_ycbcr && archive.channels == 3) spatial = ImageDomain::SpatialRgb;
            out = dct_inverse(out, spatial, archive.coeff_scale);
        } else if (*it == "ycbcr") {
            out = ycbcr_to_rgb(out);
        }
    }
    return out;
}

uint64_t ClasswiseArchive::total_bytes() const {
    uint64_t total = fs::file_size(fs::path(dir) / "manifest");
    for (const auto& c : classes) total += fs::file_size(fs::path(dir) / c.container_file);
    return total;
}

uint64_t ClasswiseArchive::raw_bytes() const {
    uint64_t per_image = static_cast<uint64_t>(height) * width * channels;
    uint64_t total = 0;
    for (const auto& c : classes) total += c.count * per_image;
    return total;
}

namespace {

void write_manifest(const ClasswiseArchive& archive) {
    std::ofstream f(fs::path(archive.dir) / "manifest");
    if (!f) throw IoError("cannot write manifest");
    f << "height " << archive.height << "\nwidth " << archive.width << "\nchannels "
      << archive.channels << "\ncoeff_scale " << archive.coeff_scale << "\ntransform";
    for (const auto& t : archive.transform_chain) f << ' ' << t;
    f << '\n';
    for (const auto& c : archive.classes)
        f << "class " << c.label << ' ' << c.count << ' ' << c.container_file << '\n';
}

} // namespace

ClasswiseArchive compress_classwise(const std::map<std::string, std::vector<ImageTensor>>& by_label,
                                    const ArchiveBuildConfig& cfg, const std::string& dir,
                                    unsigned jobs) {
    if (by_label.empty()) throw EmptyDataset();
    ClasswiseArchive archive;
    archive.dir = dir;
    archive.coeff_scale = cfg.use_dct ? cfg.coeff_scale : 1;
    const auto& first = by_label.begin()->second;
    if (first.empty()) throw EmptyDataset();
    archive.height = first[0].height;
    archive.width = first[0].width;
    archive.channels = first[0].channels;
    if (cfg.use_dct) {
        if (archive.channels == 3) archive.transform_chain = {"ycbcr", "dct"};
        else archive.transform_chain = {"dct"};
    }
    fs::create_directories(dir);

    for (const auto& [label, images] : by_label) {
        ClassInfo info;
        info.label = label;
        info.count = images.size();
        info.container_file = "class_" + label + ".egd";
        archive.classes.push_back(std::move(info));
    }

    SearchConfig search = cfg.search;
    search.condensed_mode = CondensedMode::None;

    auto compress_one = [&](size_t ci) {
        const auto& info = archive.classes[ci];
        const auto& images = by_label.at(info.label);
        std::vector<TypedRow> rows;
        rows.reserve(images.size());
        for (const auto& image : images) {
            if (image.height != archive.height || image.width != archive.width ||
                image.channels != archive.channels)
                throw ShapeMismatch("class '" + info.label + "' mixes image shapes");
            rows.push_back(flatten_image(apply_transforms(image, archive)));
        }
        Schema schema(rows[0].size());
        for (size_t i = 0; i < schema.size(); ++i) {
            schema[i].name = "s" + std::to_string(i);
            schema[i].kind = ColumnKind::Int;
        }
        fit_schema(schema, rows);
        CompressedDataset cd = compress(encode_tabular(rows, schema), search);
        write_container(cd, (fs::path(dir) / info.container_file).string());
    };

    if (jobs <= 1) {
        for (size_t ci = 0; ci < archive.classes.size(); ++ci) compress_one(ci);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mu;
        for (unsigned t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (size_t ci = next++; ci < archive.classes.size(); ci = next++) {
                    try {
                        compress_one(ci);
                    } catch (...) {
                        std::lock_guard lock(error_mu);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (error) std::rethrow_exception(error);
    }

    write_manifest(archive);
    return archive;
}

ClasswiseArchive open_archive(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest");
    if (!f) throw IoError("cannot open manifest in '" + dir + "'");
    ClasswiseArchive archive;
    archive.dir = dir;
    std::string line;
    while (std::getline(f, line)) {
        std::stringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "height") ss >> archive.height;
        else if (key == "width") ss >> archive.width;
        else if (key == "channels") ss >> archive.channels;
        else if (key == "coeff_scale") ss >> archive.coeff_scale;
        else if (key == "transform") {
            std::string tag;
            while (ss >> tag) archive.transform_chain.push_back(tag);
        } else if (key == "class") {
            ClassInfo info;
            ss >> info.label >> info.count >> info.container_file;
            archive.classes.push_back(std::move(info));
        }
    }
    return archive;
}

EpochSample sample_epoch(const ClasswiseArchive& archive, const SampleSpec& spec) {
    if (spec.fraction <= 0.0 || spec.fraction > 1.0)
        throw std::invalid_argument("fraction must be in (0, 1]");
    EpochSample out;
    size_t plane = static_cast<size_t>(archive.height) * archive.width;
    bool coeff_domain =
        !archive.transform_chain.empty() && archive.transform_chain.back() == "dct";
    for (size_t ci = 0; ci < archive.classes.size(); ++ci) {
        const auto& info = archive.classes[ci];
        uint64_t k = static_cast<uint64_t>(std::ceil(spec.fraction * static_cast<double>(info.count)));
        if (k == 0) continue;

        // partial Fisher-Yates gives k distinct indices
        KeyedRng rng(spec.seed, spec.epoch, ci);
        std::vector<uint64_t> idx(info.count);
        for (uint64_t i = 0; i < info.count; ++i) idx[i] = i;
        for (uint64_t i = 0; i < k; ++i)
            std::swap(idx[i], idx[i + rng.below(info.count - i)]);

        ContainerReader reader((fs::path(archive.dir) / info.container_file).string());
        for (uint64_t i = 0; i < k; ++i) {
            TypedRow row = reader.record(idx[i]);
            ImageDomain domain = coeff_domain ? ImageDomain::DctCoeff
                                 : archive.channels == 3 ? ImageDomain::SpatialRgb
                                                         : ImageDomain::SpatialGray;
            ImageTensor img = ImageTensor::zeros(archive.height, archive.width, archive.channels,
                                                 domain);
            if (row.size() != plane * archive.channels)
                throw CorruptContainer("record size != image size");
            for (size_t p = 0; p < row.size(); ++p)
                img.data[p] = static_cast<int32_t>(std::get<int64_t>(row[p]));
            out.images.push_back(invert_transforms(img, archive));
            out.labels.push_back(info.label);
        }
        out.bytes_read += reader.bytes_read();
    }
    return out;
}

} // namespace egd::img
