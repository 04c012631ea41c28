#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "flowprop/tensor.hpp"

namespace flowprop {

// Inverse warping: every output cell p samples the source at p + flow(p) with
// the bilinear kernel. Out-of-bounds taps contribute zero (zero padding, not
// edge clamp), so every output cell is defined and the valid mask below marks
// where the kernel support stayed fully inside the source.

struct WarpResult {
    FeatureMap warped;
    // Per cell: 1 iff every nonzero-weight bilinear tap was in bounds. Taps
    // with weight exactly zero are ignored, so integer sample coordinates on
    // the last row/column still count as valid.
    std::vector<std::uint8_t> valid;

    bool valid_at(int y, int x) const {
        return valid[static_cast<std::size_t>(y) * warped.width + x] != 0;
    }
};

// Bilinear interpolation of the four integer-grid neighbors of (x, y), per
// channel. Neighbors outside [0, W-1] x [0, H-1] contribute zero.
std::vector<float> bilinear_sample(const FeatureMap& feature, float x, float y);

// warped(p, c) = bilinear_sample(key_feature, p + flow(p)), independently per
// channel. Flow spatial dims must equal the feature's.
WarpResult warp_feature(const FeatureMap& key_feature, const FlowField& flow);

// out(p, c) = feature(p, c) * scale(p, c)
FeatureMap apply_scale_map(const FeatureMap& feature, const ScaleMap& scale);

// Backward pass of warp_feature for loss gradient `upstream`:
//  - gradient w.r.t. the source feature is the scatter transpose of the
//    bilinear gather weights;
//  - gradient w.r.t. the flow uses the analytic spatial derivative of the
//    bilinear kernel (undefined at integer sample coordinates, where the
//    kernel has kinks).
std::pair<FeatureMap, FlowField> warp_backward(const FeatureMap& key_feature,
                                               const FlowField& flow,
                                               const FeatureMap& upstream);

struct PyramidWarpStats {
    int warp_calls = 0;
    int scale_calls = 0;
    std::int64_t warp_ns = 0;
    std::int64_t scale_ns = 0;
};

// Per-level warp_feature then apply_scale_map. List lengths must equal the
// pyramid's level count. Pass apply_scale = false to skip refinement (the
// scale list may then be empty).
FeaturePyramid warp_pyramid(const FeaturePyramid& key, std::span<const FlowField> flows,
                            std::span<const ScaleMap> scales, bool apply_scale = true,
                            PyramidWarpStats* stats = nullptr,
                            std::vector<std::vector<std::uint8_t>>* valid_masks = nullptr);

} // namespace flowprop
