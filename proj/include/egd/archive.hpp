#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "egd/gede.hpp"
#include "egd/image.hpp"

namespace egd::img {

/// Deterministic stream keyed by (seed, epoch, class); splitmix64-based.
class KeyedRng {
public:
    KeyedRng(uint64_t seed, uint64_t epoch, uint64_t stream);
    uint64_t next();
    /// Uniform integer in [0, bound).
    uint64_t below(uint64_t bound);

private:
    uint64_t key_;
    uint64_t counter_ = 0;
};

struct SampleSpec {
    double fraction = 1.0; // in (0, 1]
    uint64_t seed = 0;
    uint64_t epoch = 0;
};

struct ClassInfo {
    std::string label;
    uint64_t count = 0;
    std::string container_file; // relative to the archive directory
};

/// Directory-backed class-wise archive: a `manifest` text file plus one EGD1
/// container per class, each compressed with m = 0.
struct ClasswiseArchive {
    std::string dir;
    uint32_t height = 0, width = 0, channels = 0;
    std::vector<std::string> transform_chain; // tags in application order
    int32_t coeff_scale = 1;                  // fixed-point scale for stored DCT coefficients
    std::vector<ClassInfo> classes;

    uint64_t total_bytes() const;
    /// Raw (uncompressed) size of all images in bytes, at 1 byte per sample.
    uint64_t raw_bytes() const;
};

struct ArchiveBuildConfig {
    SearchConfig search;  // condensed_mode forced to None
    bool use_dct = false;
    int32_t coeff_scale = 4;
};

ClasswiseArchive compress_classwise(const std::map<std::string, std::vector<ImageTensor>>& by_label,
                                    const ArchiveBuildConfig& cfg, const std::string& dir,
                                    unsigned jobs = 1);

ClasswiseArchive open_archive(const std::string& dir);

struct EpochSample {
    std::vector<ImageTensor> images;
    std::vector<std::string> labels;
    uint64_t bytes_read = 0; // container bytes touched to produce the sample
};

/// Draws ceil(fraction * n_c) records per class without replacement, decodes
/// them through file-backed random access, and inverts the transform chain.
EpochSample sample_epoch(const ClasswiseArchive& archive, const SampleSpec& spec);

/// Applies the archive's forward transform chain to one image.
ImageTensor apply_transforms(const ImageTensor& img, const ClasswiseArchive& archive);
/// Inverse of apply_transforms.
ImageTensor invert_transforms(const ImageTensor& img, const ClasswiseArchive& archive);

/// Flattens a (possibly transformed) image into one integer row per sample position.
TypedRow flatten_image(const ImageTensor& img);

} // namespace egd::img
