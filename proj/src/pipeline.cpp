#include "flowprop/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "flowprop/errors.hpp"
#include "flowprop/warp.hpp"

namespace flowprop {

namespace {

inline std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::shared_ptr<const FeatureExtractor> default_extractor(const PipelineConfig& config) {
    return std::make_shared<ToyExtractor>(config.extractor);
}

std::shared_ptr<const FlowEstimator> default_flow(const PipelineConfig& config,
                                                  const FeatureExtractor& extractor) {
    const LevelDims& base = extractor.level_dims().front();
    return std::make_shared<BlockMatchEstimator>(config.block_match, base.height, base.width);
}

} // namespace

Pipeline::Pipeline(PipelineConfig config)
    : Pipeline(std::move(config), nullptr, nullptr) {}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<const FeatureExtractor> extractor,
                   std::shared_ptr<const FlowEstimator> flow)
    : config_(std::move(config)) {
    if (config_.key_interval < 1)
        throw ConfigError("key interval must be >= 1, got " +
                          std::to_string(config_.key_interval));
    if (config_.enable_ma && !config_.enable_fa)
        throw ConfigError("memory aggregation requires feature approximation");

    extractor_ = extractor ? std::move(extractor) : default_extractor(config_);
    flow_ = flow ? std::move(flow) : default_flow(config_, *extractor_);
    anchors_ = build_anchors(extractor_->level_dims(), config_.head.anchors_per_cell);
}

void Pipeline::reset() {
    memory_ = MemoryState{};
    current_features_ = FeaturePyramid{};
    valid_masks_.clear();
    counters_ = Counters{};
}

FrameOutcome Pipeline::step(const Image& frame) {
    const ExtractorConfig& ec = config_.extractor;
    if (frame.height != ec.input_height || frame.width != ec.input_width)
        throw ContractError("pipeline frame is " + frame.shape_str() + ", config expects " +
                            std::to_string(ec.input_height) + "x" +
                            std::to_string(ec.input_width) + "x3");

    FrameOutcome outcome;
    outcome.frame_index = static_cast<int>(counters_.frames);
    const int idx = outcome.frame_index;
    outcome.role = (idx == 0) ? FrameRole::initial
                              : (idx % config_.key_interval == 0 ? FrameRole::key
                                                                 : FrameRole::non_key);
    valid_masks_.clear();

    const bool approximate = config_.enable_fa && outcome.role == FrameRole::non_key;

    if (approximate) {
        // Feature approximation: flow vs. the last key image, then warp the
        // memory pyramid. The extractor is not invoked.
        std::int64_t t0 = now_ns();
        const FlowEstimate est =
            flow_->estimate(memory_.key_image, frame, memory_.key_index, idx);
        const FlowPyramid flows = build_flow_pyramid(est, extractor_->level_dims());
        ++counters_.flow_calls;
        std::int64_t t1 = now_ns();
        outcome.timings.flow_ns = t1 - t0;

        PyramidWarpStats wstats;
        current_features_ = warp_pyramid(memory_.pyramid, flows.flows, flows.scales,
                                         config_.enable_scale_maps, &wstats, &valid_masks_);
        outcome.timings.warp_ns = now_ns() - t1;
        memory_.frames_since_key =
            std::min(memory_.frames_since_key + 1, config_.key_interval - 1);
    } else {
        std::int64_t t0 = now_ns();
        FeaturePyramid fresh = extractor_->extract(frame);
        ++counters_.extractor_calls;
        outcome.timings.extract_ns = now_ns() - t0;

        const bool aggregate = config_.enable_ma && outcome.role == FrameRole::key &&
                               memory_.present;
        if (aggregate) {
            std::int64_t t1 = now_ns();
            const FlowEstimate est =
                flow_->estimate(memory_.key_image, frame, memory_.key_index, idx);
            const FlowPyramid flows = build_flow_pyramid(est, extractor_->level_dims());
            ++counters_.flow_calls;
            std::int64_t t2 = now_ns();
            outcome.timings.flow_ns = t2 - t1;

            PyramidAggregateStats astats;
            current_features_ = aggregate_pyramid(memory_.pyramid, fresh, flows,
                                                  config_.embedding, config_.enable_scale_maps,
                                                  &astats);
            outcome.timings.embed_ns = astats.embed_ns;
            outcome.timings.aggregate_ns = astats.warp_ns + astats.fuse_ns;
        } else {
            current_features_ = std::move(fresh);
        }

        if (config_.enable_fa) {
            // The (aggregated) key features become the carried memory.
            memory_.pyramid = current_features_;
            memory_.key_image = frame;
            memory_.key_index = idx;
            memory_.frames_since_key = 0;
            memory_.present = true;
        }
    }

    std::int64_t td = now_ns();
    outcome.detections = predict(current_features_, config_.head, anchors_);
    outcome.timings.detect_ns = now_ns() - td;

    ++counters_.frames;
    return outcome;
}

TrainingTriplet make_triplet(int target, int offset, int t_mem_k) {
    TrainingTriplet t;
    t.target = target;
    t.key = std::max(target - offset, t_mem_k); // clamp keeps mem >= 0
    t.mem = t.key - t_mem_k;
    return t;
}

TrainingTriplet select_training_triplet(int clip_length, int t_mem_k, int t_k_i, Rng& rng) {
    if (t_mem_k < 1 || t_k_i < 0) throw SamplingError("triplet offsets must be positive");
    if (clip_length <= t_mem_k)
        throw SamplingError("clip of length " + std::to_string(clip_length) +
                            " is too short for a memory offset of " + std::to_string(t_mem_k));

    // Prefer targets far enough in that the key offset never clamps; only
    // clips barely longer than t_mem_k fall back to the clamped regime.
    const int lo = std::min(clip_length - 1, t_mem_k + t_k_i);
    const int target = rng.uniform_int(lo, clip_length - 1);
    const int offset = rng.uniform_int(0, t_k_i);
    return make_triplet(target, offset, t_mem_k);
}

std::vector<int> sample_clip_frames(int clip_length, int n) {
    if (clip_length < 1 || n < 1)
        throw ContractError("sample_clip_frames: clip length and n must be >= 1");
    std::vector<int> out;
    if (n == 1) {
        out.push_back(0);
        return out;
    }
    for (int j = 0; j < n; ++j) {
        const double pos = static_cast<double>(j) * (clip_length - 1) / (n - 1);
        const int idx = static_cast<int>(std::lround(pos));
        if (out.empty() || out.back() != idx) out.push_back(idx);
    }
    return out;
}

} // namespace flowprop
