#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flowprop/detect.hpp"
#include "flowprop/flow.hpp"
#include "flowprop/pipeline.hpp"
#include "flowprop/tensor.hpp"

namespace flowprop {

// Synthetic clips with exact kinematics: textured rectangles translating at
// constant integer velocity over a background, so flow, boxes and feature
// reconstruction all have analytic ground truth.

struct SynthObject {
    int class_id = 0;
    int width = 16;
    int height = 16;
    int start_x = 0;
    int start_y = 0;
    int velocity_x = 0; // pixels per frame
    int velocity_y = 0;
    std::uint64_t texture_seed = 1;
};

struct SynthConfig {
    int image_height = 64;
    int image_width = 64;
    int frame_count = 12;
    std::vector<SynthObject> objects;
    float background_texture_amplitude = 0.0f; // static pattern, shared by all frames
    float noise_amplitude = 0.0f;              // per-frame noise
};

struct SynthSequence {
    SynthConfig config;
    std::vector<Image> frames;

    int object_x(int object, int frame) const;
    int object_y(int object, int frame) const;
    bool inside_object(int object, int frame, double px, double py) const;

    // Normalized ground-truth boxes of one frame.
    std::vector<GroundTruth> boxes(int frame) const;

    // Ground-truth flow on a feature grid, in that grid's cell units. A cell
    // whose receptive-field center lies inside an object carries that
    // object's displacement toward the key frame
    // (position_in_key - position_in_current); background cells carry zero.
    FlowField gt_flow(int current, int key, const LevelDims& dims,
                      const LevelGeometry& geom) const;

    // Cells whose receptive windows see rigidly translated content in both
    // frames: fully inside one object in both, or fully background in both
    // (in particular not over ground the object vacated). Only these cells
    // are exactly reconstructable by warping; boundary-mixing cells are not.
    std::vector<std::uint8_t> consistent_mask(int current, int key, const LevelDims& dims,
                                              const LevelGeometry& geom) const;
};

// Throws ConfigError when an object leaves the frame, naming the first
// offending frame. Deterministic per (config, seed).
SynthSequence generate_sequence(const SynthConfig& config, std::uint64_t seed);

// Numbered portable pixmaps plus manifest.txt (one line per frame:
// index, then x1 y1 x2 y2 vx vy per object, boxes normalized).
void export_sequence(const SynthSequence& sequence, const std::filesystem::path& dir);

// Analytic flow provider for pipelines running over a generated sequence.
class SynthFlowEstimator final : public FlowEstimator {
public:
    SynthFlowEstimator(const SynthSequence* sequence, LevelDims base_dims, LevelGeometry base_geom)
        : sequence_(sequence), dims_(base_dims), geom_(base_geom) {}

    FlowEstimate estimate(const Image&, const Image&, int key_index,
                          int current_index) const override;

private:
    const SynthSequence* sequence_;
    LevelDims dims_;
    LevelGeometry geom_;
};

enum class ErrorMask {
    valid_interior,     // warp valid mask plus a receptive-field border margin
    content_consistent, // additionally restricted to consistent_mask cells
};

// For each key interval k: run the pipeline over the sequence and compare
// every non-key frame's approximated pyramid against direct extraction, mean
// absolute error over masked cells. k = 1 reports exactly 0 (nothing is
// approximated). Pass a flow estimator to override the pipeline default
// (e.g. a SynthFlowEstimator for ground-truth flow).
std::vector<double> approximation_error(const SynthSequence& sequence,
                                        const PipelineConfig& config,
                                        std::span<const int> k_values,
                                        ErrorMask mask = ErrorMask::valid_interior,
                                        std::shared_ptr<const FlowEstimator> flow = nullptr);

} // namespace flowprop
