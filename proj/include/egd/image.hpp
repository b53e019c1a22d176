#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace egd::img {

enum class ImageDomain : uint8_t { SpatialRgb = 0, SpatialGray = 1, YCbCr = 2, DctCoeff = 3 };

const char* to_string(ImageDomain d);
ImageDomain image_domain_from_string(const std::string& s);

/// Channel-major integer image: data[c * H * W + y * W + x].
struct ImageTensor {
    uint32_t height = 0;
    uint32_t width = 0;
    uint32_t channels = 1;
    std::vector<int32_t> data;
    ImageDomain domain = ImageDomain::SpatialGray;

    int32_t& at(uint32_t c, uint32_t y, uint32_t x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    int32_t at(uint32_t c, uint32_t y, uint32_t x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    size_t samples() const { return data.size(); }

    static ImageTensor zeros(uint32_t h, uint32_t w, uint32_t c, ImageDomain domain);
};

/// Full-range BT.601, rounded and clamped to [0,255]. Round trip error <= 1 per channel.
ImageTensor rgb_to_ycbcr(const ImageTensor& img);
ImageTensor ycbcr_to_rgb(const ImageTensor& img);

/// Orthonormal whole-channel 2D DCT-II per channel. Coefficients are stored as
/// round(scale * coefficient); scale 1 matches plain integer rounding.
ImageTensor dct_forward(const ImageTensor& img, int32_t scale = 1);

/// Inverse transform; rounds and clamps samples to [0,255]. `spatial_domain`
/// names the domain the coefficients came from.
ImageTensor dct_inverse(const ImageTensor& coeffs, ImageDomain spatial_domain, int32_t scale = 1);

} // namespace egd::img
