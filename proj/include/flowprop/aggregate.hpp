#pragma once

#include <cstdint>
#include <vector>

#include "flowprop/flow.hpp"
#include "flowprop/tensor.hpp"

namespace flowprop {

// Memory aggregation at key frames: embed both feature maps, score each
// position by cosine similarity, normalize the two scores exponentially, fuse
// as a per-position convex combination shared across channels.

// Seeded, fixed embedding weights. Per level the bottleneck plan is
// C -> C/2 -> C/2 -> 2C with clipped-linear activation between stages;
// weights derive deterministically from (seed, level, C).
struct EmbeddingConfig {
    std::uint64_t seed = 7;
};

// Per-position fusion weights; w_mem(p) + w_cur(p) = 1, both in [0, 1].
struct WeightPair {
    int height = 0;
    int width = 0;
    std::vector<float> w_mem;
    std::vector<float> w_cur;

    float mem_at(int y, int x) const { return w_mem[static_cast<std::size_t>(y) * width + x]; }
    float cur_at(int y, int x) const { return w_cur[static_cast<std::size_t>(y) * width + x]; }
};

// Three successive 1x1 projections (no bias); output has 2C channels and the
// input's spatial dims. Throws ConfigError for odd C.
FeatureMap embed_feature(const FeatureMap& feature, const EmbeddingConfig& config, int level = 0);

// Per position: s_mem = cosine(e_mem, e_cur), s_cur = cosine(e_cur, e_cur),
// weights = exp normalization over the two scores. Zero-norm embedding
// vectors score cosine 0.
WeightPair similarity_weights(const FeatureMap& embedded_mem, const FeatureMap& embedded_cur);

// out(p, c) = w_mem(p) * memory_warped(p, c) + w_cur(p) * current(p, c),
// clamped into the closed per-element interval so the convex-combination
// invariant survives rounding.
FeatureMap aggregate_features(const FeatureMap& memory_warped, const FeatureMap& current,
                              const WeightPair& weights);

struct PyramidAggregateStats {
    int aggregations = 0;
    std::int64_t warp_ns = 0;
    std::int64_t embed_ns = 0;
    std::int64_t fuse_ns = 0; // similarity weights + weighted fusion
};

// Per level: warp memory with that level's flow (and scale map when
// apply_scale), embed both maps, compute weights, fuse.
FeaturePyramid aggregate_pyramid(const FeaturePyramid& memory, const FeaturePyramid& current,
                                 const FlowPyramid& flows, const EmbeddingConfig& config,
                                 bool apply_scale = true, PyramidAggregateStats* stats = nullptr);

} // namespace flowprop
