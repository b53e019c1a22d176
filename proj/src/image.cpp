#include "egd/image.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "egd/errors.hpp"

namespace egd::img {

const char* to_string(ImageDomain d) {
    switch (d) {
    case ImageDomain::SpatialRgb: return "spatial_rgb";
    case ImageDomain::SpatialGray: return "spatial_gray";
    case ImageDomain::YCbCr: return "ycbcr";
    case ImageDomain::DctCoeff: return "dct_coeff";
    }
    return "?";
}

ImageDomain image_domain_from_string(const std::string& s) {
    if (s == "spatial_rgb") return ImageDomain::SpatialRgb;
    if (s == "spatial_gray") return ImageDomain::SpatialGray;
    if (s == "ycbcr") return ImageDomain::YCbCr;
    if (s == "dct_coeff") return ImageDomain::DctCoeff;
    throw std::runtime_error("unknown image domain '" + s + "'");
}

ImageTensor ImageTensor::zeros(uint32_t h, uint32_t w, uint32_t c, ImageDomain domain) {
    ImageTensor t;
    t.height = h;
    t.width = w;
    t.channels = c;
    t.domain = domain;
    t.data.assign(static_cast<size_t>(h) * w * c, 0);
    return t;
}

namespace {

int32_t clamp255(double v) {
    long r = std::lround(v);
    if (r < 0) return 0;
    if (r > 255) return 255;
    return static_cast<int32_t>(r);
}

} // namespace

ImageTensor rgb_to_ycbcr(const ImageTensor& img) {
    if (img.domain != ImageDomain::SpatialRgb || img.channels != 3)
        throw WrongDomain("rgb_to_ycbcr expects a 3-channel spatial_rgb image");
    ImageTensor out = ImageTensor::zeros(img.height, img.width, 3, ImageDomain::YCbCr);
    size_t plane = static_cast<size_t>(img.height) * img.width;
    for (size_t i = 0; i < plane; ++i) {
        double r = img.data[i], g = img.data[plane + i], b = img.data[2 * plane + i];
        out.data[i] = clamp255(0.299 * r + 0.587 * g + 0.114 * b);
        out.data[plane + i] = clamp255(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b);
        out.data[2 * plane + i] = clamp255(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
    }
    return out;
}

ImageTensor ycbcr_to_rgb(const ImageTensor& img) {
    if (img.domain != ImageDomain::YCbCr || img.channels != 3)
        throw WrongDomain("ycbcr_to_rgb expects a 3-channel ycbcr image");
    ImageTensor out = ImageTensor::zeros(img.height, img.width, 3, ImageDomain::SpatialRgb);
    size_t plane = static_cast<size_t>(img.height) * img.width;
    for (size_t i = 0; i < plane; ++i) {
        double y = img.data[i];
        double cb = img.data[plane + i] - 128.0;
        double cr = img.data[2 * plane + i] - 128.0;
        out.data[i] = clamp255(y + 1.402 * cr);
        out.data[plane + i] = clamp255(y - 0.344136 * cb - 0.714136 * cr);
        out.data[2 * plane + i] = clamp255(y + 1.772 * cb);
    }
    return out;
}

namespace {

/// Orthonormal DCT-II basis, rows are frequencies: C[k][i].
std::vector<double> dct_basis(uint32_t n) {
    std::vector<double> c(static_cast<size_t>(n) * n);
    double s0 = std::sqrt(1.0 / n), s = std::sqrt(2.0 / n);
    for (uint32_t k = 0; k < n; ++k)
        for (uint32_t i = 0; i < n; ++i)
            c[static_cast<size_t>(k) * n + i] =
                (k == 0 ? s0 : s) * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
    return c;
}

/// tmp = C * X (rows transform) then out = tmp * C^T (cols transform), per channel.
void dct2d(const int32_t* in, double* out, uint32_t h, uint32_t w, const std::vector<double>& ch,
           const std::vector<double>& cw, bool inverse) {
    std::vector<double> tmp(static_cast<size_t>(h) * w);
    for (uint32_t k = 0; k < h; ++k)
        for (uint32_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (uint32_t y = 0; y < h; ++y) {
                double basis = inverse ? ch[static_cast<size_t>(y) * h + k]
                                       : ch[static_cast<size_t>(k) * h + y];
                acc += basis * in[static_cast<size_t>(y) * w + x];
            }
            tmp[static_cast<size_t>(k) * w + x] = acc;
        }
    for (uint32_t k = 0; k < h; ++k)
        for (uint32_t l = 0; l < w; ++l) {
            double acc = 0.0;
            for (uint32_t x = 0; x < w; ++x) {
                double basis = inverse ? cw[static_cast<size_t>(x) * w + l]
                                       : cw[static_cast<size_t>(l) * w + x];
                acc += basis * tmp[static_cast<size_t>(k) * w + x];
            }
            out[static_cast<size_t>(k) * w + l] = acc;
        }
}

} // namespace

ImageTensor dct_forward(const ImageTensor& img, int32_t scale) {
    if (img.domain == ImageDomain::DctCoeff) throw WrongDomain("input already in coefficient domain");
    auto ch = dct_basis(img.height), cw = dct_basis(img.width);
    ImageTensor out = ImageTensor::zeros(img.height, img.width, img.channels, ImageDomain::DctCoeff);
    size_t plane = static_cast<size_t>(img.height) * img.width;
    std::vector<double> coef(plane);
    for (uint32_t c = 0; c < img.channels; ++c) {
        dct2d(img.data.data() + c * plane, coef.data(), img.height, img.width, ch, cw, false);
        for (size_t i = 0; i < plane; ++i)
            out.data[c * plane + i] = static_cast<int32_t>(std::lround(scale * coef[i]));
    }
    return out;
}

ImageTensor dct_inverse(const ImageTensor& coeffs, ImageDomain spatial_domain, int32_t scale) {
    if (coeffs.domain != ImageDomain::DctCoeff) throw WrongDomain("input is not in coefficient domain");
    if (spatial_domain == ImageDomain::DctCoeff) throw WrongDomain("target must be a spatial domain");
    auto ch = dct_basis(coeffs.height), cw = dct_basis(coeffs.width);
    ImageTensor out = ImageTensor::zeros(coeffs.height, coeffs.width, coeffs.channels, spatial_domain);
    size_t plane = static_cast<size_t>(coeffs.height) * coeffs.width;
    std::vector<double> pix(plane);
    for (uint32_t c = 0; c < coeffs.channels; ++c) {
        dct2d(coeffs.data.data() + c * plane, pix.data(), coeffs.height, coeffs.width, ch, cw, true);
        for (size_t i = 0; i < plane; ++i) out.data[c * plane + i] = clamp255(pix[i] / scale);
    }
    return out;
}

} // namespace egd::img
