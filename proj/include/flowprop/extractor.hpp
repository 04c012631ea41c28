#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "flowprop/tensor.hpp"

namespace flowprop {

struct LevelDims {
    int height = 0;
    int width = 0;
    int channels = 0;
};

// Seeded stand-in for a CNN backbone: a chain of valid (unpadded) strided
// convolutions with clipped-linear activation, one per pyramid level. No
// padding means interior features are exactly translation-equivariant at each
// level's cumulative stride, which is what the warp reconstruction checks
// lean on.
struct ExtractorConfig {
    std::uint64_t seed = 1;
    int input_height = 300;
    int input_width = 300;
    std::vector<LevelDims> levels;
    // Extra 1x1 channel-mixing convolutions after each level's strided conv.
    // They deepen the stack (the backbone this stands in for is deep) without
    // touching grid geometry, so equivariance margins are unaffected.
    int mixing_layers = 3;

    // First five detection scales of the 300x300 single-shot convention:
    // 38^2, 19^2, 10^2, 5^2, 3^2 (the sixth 1x1 scale cannot be warped
    // spatially and is dropped).
    static ExtractorConfig ssd300(std::uint64_t seed = 1,
                                  std::vector<int> channels = {160, 192, 224, 224, 224});
};

// How one level's grid maps back to input pixels. Derived, not configured:
// stride/kernel per conv step follow from consecutive grid dims.
struct LevelGeometry {
    int kernel_h = 0, kernel_w = 0; // conv kernel from the previous grid
    int stride_h = 0, stride_w = 0; // conv stride on the previous grid
    int pixel_stride_y = 0;         // cumulative input-pixel step per cell
    int pixel_stride_x = 0;
    int receptive_h = 0;            // receptive field extent in input pixels
    int receptive_w = 0;
    // Input-pixel coordinate of cell (0,0)'s receptive-field center.
    double center_y() const { return (receptive_h - 1) / 2.0; }
    double center_x() const { return (receptive_w - 1) / 2.0; }
};

class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual FeaturePyramid extract(const Image& image) const = 0;
    virtual const std::vector<LevelDims>& level_dims() const = 0;
    virtual const std::vector<LevelGeometry>& geometry() const = 0;
};

class ToyExtractor final : public FeatureExtractor {
public:
    // Throws ConfigError when a level does not fit inside its predecessor.
    explicit ToyExtractor(ExtractorConfig config);

    // Throws ConfigError when image dims do not match the configured input size.
    FeaturePyramid extract(const Image& image) const override;

    const std::vector<LevelDims>& level_dims() const override { return config_.levels; }
    const std::vector<LevelGeometry>& geometry() const override { return geometry_; }
    const ExtractorConfig& config() const { return config_; }

    // Cells within this margin of a level's border have receptive fields that
    // spill past translated content; equivariance checks exclude them.
    int interior_margin(std::size_t level) const;

private:
    ExtractorConfig config_;
    std::vector<LevelGeometry> geometry_;
    // Per level, layout [(ky*kw + kx)*in_c + ic]*out_c + oc so the channel
    // accumulation vectorizes.
    std::vector<std::vector<float>> weights_;
    // Per level, mixing_layers square CxC matrices, same layout.
    std::vector<std::vector<std::vector<float>>> mixing_;
};

// Convenience wrapper: build the extractor and run it once.
FeaturePyramid toy_extract(const Image& image, const ExtractorConfig& config);

} // namespace flowprop
