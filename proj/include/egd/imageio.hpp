#pragma once

#include <string>
#include <vector>

#include "egd/image.hpp"

namespace egd::img {

/// IDX image file (ubyte, 3 or 4 dimensions). 3 dims decode as grayscale,
/// 4 dims as HxWxC with C=1 or 3.
std::vector<ImageTensor> read_idx_images(const std::string& path);
std::vector<int64_t> read_idx_labels(const std::string& path);

void write_idx_images(const std::string& path, const std::vector<ImageTensor>& images);
void write_idx_labels(const std::string& path, const std::vector<int64_t>& labels);

/// Binary PGM (P5) / PPM (P6), maxval 255.
ImageTensor read_pnm(const std::string& path);
void write_pnm(const std::string& path, const ImageTensor& img);

} // namespace egd::img
