#pragma once

#include <vector>

#include "flowprop/extractor.hpp"
#include "flowprop/tensor.hpp"

namespace flowprop {

// Motion field plus position-wise scale map at the base (finest feature)
// resolution. Stub estimators emit all-ones scale maps with a single
// broadcast channel; learned refinement is out of scope.
struct FlowEstimate {
    FlowField flow;
    ScaleMap scale;
};

// Per-level (flow, scale) pairs sized to match a feature pyramid.
struct FlowPyramid {
    std::vector<FlowField> flows;
    std::vector<ScaleMap> scales;

    std::size_t level_count() const { return flows.size(); }
};

// Block matching over images downsampled to the flow grid: one block per flow
// cell, radii measured in grid cells, displacement chosen by minimum sum of
// absolute differences with ties broken toward zero motion. Blocks whose
// texture variance falls below the threshold emit zero flow.
struct BlockMatchConfig {
    int block_radius = 1;
    int search_radius = 4;
    float texture_threshold = 1e-4f;
};

// Flow such that current(p) ~ key(p + flow(p)), i.e. displacements point from
// the current frame back into the key frame. Output grid is grid_h x grid_w.
FlowEstimate estimate_flow(const Image& key_image, const Image& current_image,
                           const BlockMatchConfig& config, int grid_h, int grid_w);

// Average-pool displacement components to the target dims, then rescale each
// component by (target extent / source extent) so displacements stay expressed
// in the target grid's own cell units.
FlowField downscale_flow(const FlowField& flow, int target_h, int target_w);

// Spatial window-average of a scale map (no magnitude rescale; scales are
// multiplicative factors, not displacements).
ScaleMap downscale_scale_map(const ScaleMap& scale, int target_h, int target_w);

// Level l flow = downscale_flow(base flow, dims[l]); scale maps are window
// averaged per channel. A base scale map with one channel broadcasts to each
// level's channel count; otherwise its channel count must match the level's.
FlowPyramid build_flow_pyramid(const FlowEstimate& base, const std::vector<LevelDims>& level_dims);

// Pluggable flow source for the pipeline. Frame indices accompany the images
// so oracle providers (synthetic ground truth) can answer analytically.
class FlowEstimator {
public:
    virtual ~FlowEstimator() = default;
    virtual FlowEstimate estimate(const Image& key_image, const Image& current_image,
                                  int key_index, int current_index) const = 0;
};

class BlockMatchEstimator final : public FlowEstimator {
public:
    BlockMatchEstimator(BlockMatchConfig config, int grid_h, int grid_w)
        : config_(config), grid_h_(grid_h), grid_w_(grid_w) {}

    FlowEstimate estimate(const Image& key_image, const Image& current_image, int /*key_index*/,
                          int /*current_index*/) const override {
        return estimate_flow(key_image, current_image, config_, grid_h_, grid_w_);
    }

private:
    BlockMatchConfig config_;
    int grid_h_;
    int grid_w_;
};

} // namespace flowprop
