#pragma once

#include <filesystem>

#include "flowprop/tensor.hpp"

namespace flowprop {

// Binary tensor fixture format, used for all fixture exchange and cross-checks:
//   bytes 0..7   magic "FPTENSR1"
//   bytes 8..19  H, W, C as 4-byte little-endian unsigned ints
//   bytes 20..   H*W*C IEEE-754 binary32 values, little-endian,
//                row-major channel-last
// Round trips are bit-exact for any finite-valued map. Malformed or truncated
// files raise FormatError carrying the byte offset of the problem.

void write_feature_map(const FeatureMap& map, const std::filesystem::path& path);
FeatureMap read_feature_map(const std::filesystem::path& path);

// Minimal binary portable pixmap (P6, maxval 255) reader/writer for frame
// export and disk-loaded benchmark input. Values quantize to 8 bits on write.
void write_ppm(const Image& image, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

} // namespace flowprop
