#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "flowprop/aggregate.hpp"
#include "flowprop/detect.hpp"
#include "flowprop/extractor.hpp"
#include "flowprop/flow.hpp"
#include "flowprop/rng.hpp"
#include "flowprop/tensor.hpp"

namespace flowprop {

// Online per-frame state machine: the initial frame extracts features and
// seeds the memory; non-key frames approximate features by warping the
// memory with estimated flow (no extraction); every k-th frame is a key
// frame that extracts fresh features and, with aggregation enabled, fuses
// them with the warped memory before detecting and becoming the new memory.

enum class FrameRole { initial, key, non_key };

struct PipelineConfig {
    int key_interval = 10; // paper-equivalent default
    bool enable_fa = true;
    bool enable_ma = true;
    bool enable_scale_maps = true;
    ExtractorConfig extractor = ExtractorConfig::ssd300();
    EmbeddingConfig embedding;
    BlockMatchConfig block_match;
    HeadConfig head;
};

struct MemoryState {
    FeaturePyramid pyramid; // post-aggregation key features
    Image key_image;
    int key_index = -1;
    int frames_since_key = 0;
    bool present = false;
};

struct StageTimings {
    std::int64_t extract_ns = 0;
    std::int64_t flow_ns = 0;   // estimation + pyramid construction
    std::int64_t warp_ns = 0;   // non-key feature approximation
    std::int64_t embed_ns = 0;  // both embeddings at a key frame
    std::int64_t aggregate_ns = 0; // memory warp + weights + fusion
    std::int64_t detect_ns = 0;
};

struct FrameOutcome {
    int frame_index = 0;
    FrameRole role = FrameRole::initial;
    std::vector<Detection> detections;
    StageTimings timings;
};

class Pipeline {
public:
    // Throws ConfigError for k < 1 or aggregation without approximation.
    explicit Pipeline(PipelineConfig config);
    Pipeline(PipelineConfig config, std::shared_ptr<const FeatureExtractor> extractor,
             std::shared_ptr<const FlowEstimator> flow);

    FrameOutcome step(const Image& frame);

    // Features the last step handed to the detector.
    const FeaturePyramid& current_features() const { return current_features_; }
    // Per-level warp validity masks of the last non-key step (empty otherwise).
    const std::vector<std::vector<std::uint8_t>>& last_valid_masks() const { return valid_masks_; }
    const MemoryState& memory() const { return memory_; }
    const PipelineConfig& config() const { return config_; }
    const FeatureExtractor& extractor() const { return *extractor_; }

    struct Counters {
        std::int64_t frames = 0;
        std::int64_t extractor_calls = 0;
        std::int64_t flow_calls = 0;
    };
    const Counters& counters() const { return counters_; }

    void reset();

private:
    PipelineConfig config_;
    std::shared_ptr<const FeatureExtractor> extractor_;
    std::shared_ptr<const FlowEstimator> flow_;
    AnchorGrid anchors_;
    MemoryState memory_;
    FeaturePyramid current_features_;
    std::vector<std::vector<std::uint8_t>> valid_masks_;
    Counters counters_;
};

// Three-frame training sample: indices (mem, key, target) into a clip with
// 0 <= mem < key <= target. The key-to-memory offset is fixed; the
// target-to-key offset is random in [0, t_k_i].
struct TrainingTriplet {
    int mem = 0;
    int key = 0;
    int target = 0;
};

// Deterministic core: clamps key at t_mem_k so mem stays >= 0 near clip starts.
TrainingTriplet make_triplet(int target, int offset, int t_mem_k);

// Draw a triplet: target uniform over the widest range that keeps the
// target-key offset distribution uniform when the clip allows it (clamping
// only engages on clips barely longer than t_mem_k). Throws SamplingError
// when clip_length <= t_mem_k.
TrainingTriplet select_training_triplet(int clip_length, int t_mem_k, int t_k_i, Rng& rng);

// Evenly sampled frame indices round(j*(L-1)/(n-1)), deduplicated preserving
// order; {0} for n == 1.
std::vector<int> sample_clip_frames(int clip_length, int n);

} // namespace flowprop
