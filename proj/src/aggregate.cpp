#include "flowprop/aggregate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "flowprop/errors.hpp"
#include "flowprop/rng.hpp"
#include "flowprop/warp.hpp"

namespace flowprop {

namespace {

inline std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// One 1x1 projection stage: out(p) = W * in(p), optionally clipped at zero.
void project(const FeatureMap& in, FeatureMap& out, const std::vector<float>& w, bool clip) {
    const int ic = in.channels;
    const int oc = out.channels;
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            const float* src = in.cell(y, x);
            float* dst = out.cell(y, x);
            for (int o = 0; o < oc; ++o) dst[o] = 0.0f;
            for (int i = 0; i < ic; ++i) {
                const float v = src[i];
                const float* wp = w.data() + static_cast<std::size_t>(i) * oc;
                for (int o = 0; o < oc; ++o) dst[o] += v * wp[o];
            }
            if (clip)
                for (int o = 0; o < oc; ++o) dst[o] = std::max(0.0f, dst[o]);
        }
    }
}

std::vector<float> stage_weights(Rng& rng, int in_c, int out_c) {
    const float a = std::sqrt(6.0f / static_cast<float>(in_c));
    std::vector<float> w(static_cast<std::size_t>(in_c) * out_c);
    for (float& v : w) v = rng.uniform_float(-a, a);
    return w;
}

// cosine(a, b) with zero-norm vectors scoring 0.
inline float cosine(const float* a, const float* b, int n) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < n; ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0f;
    return static_cast<float>(dot / std::sqrt(na * nb));
}

} // namespace

FeatureMap embed_feature(const FeatureMap& feature, const EmbeddingConfig& config, int level) {
    if (feature.channels % 2 != 0)
        throw ConfigError("embed_feature: channel count " + std::to_string(feature.channels) +
                          " must be even");
    const int c = feature.channels;
    const int half = c / 2;

    // Weight bank keyed by (seed, level); the level's channel count fixes the
    // stage shapes, so identical (seed, level, C) always reproduce bit-identical
    // projections.
    Rng rng = Rng::fork(config.seed, static_cast<std::uint64_t>(level));
    const std::vector<float> w1 = stage_weights(rng, c, half);
    const std::vector<float> w2 = stage_weights(rng, half, half);
    const std::vector<float> w3 = stage_weights(rng, half, 2 * c);

    FeatureMap s1(feature.height, feature.width, half);
    project(feature, s1, w1, /*clip=*/true);
    FeatureMap s2(feature.height, feature.width, half);
    project(s1, s2, w2, /*clip=*/true);
    FeatureMap s3(feature.height, feature.width, 2 * c);
    project(s2, s3, w3, /*clip=*/false);
    return s3;
}

WeightPair similarity_weights(const FeatureMap& embedded_mem, const FeatureMap& embedded_cur) {
    if (!embedded_mem.same_shape(embedded_cur))
        throw ContractError("similarity_weights: memory embedding " + embedded_mem.shape_str() +
                            " does not match current embedding " + embedded_cur.shape_str());

    WeightPair weights;
    weights.height = embedded_mem.height;
    weights.width = embedded_mem.width;
    const std::size_t cells = static_cast<std::size_t>(weights.height) * weights.width;
    weights.w_mem.resize(cells);
    weights.w_cur.resize(cells);

    const int n = embedded_mem.channels;
    for (int y = 0; y < weights.height; ++y) {
        for (int x = 0; x < weights.width; ++x) {
            const float* em = embedded_mem.cell(y, x);
            const float* ec = embedded_cur.cell(y, x);
            const float s_mem = cosine(em, ec, n);
            const float s_cur = cosine(ec, ec, n);
            // Two-term exponential normalization; scores live in [-1, 1] so no
            // overflow guard is needed.
            const float e_mem = std::exp(s_mem);
            const float e_cur = std::exp(s_cur);
            const std::size_t i = static_cast<std::size_t>(y) * weights.width + x;
            weights.w_mem[i] = e_mem / (e_mem + e_cur);
            weights.w_cur[i] = e_cur / (e_mem + e_cur);
        }
    }
    return weights;
}

FeatureMap aggregate_features(const FeatureMap& memory_warped, const FeatureMap& current,
                              const WeightPair& weights) {
    if (!memory_warped.same_shape(current))
        throw ContractError("aggregate_features: memory " + memory_warped.shape_str() +
                            " does not match current " + current.shape_str());
    if (weights.height != current.height || weights.width != current.width)
        throw ContractError("aggregate_features: weights " + std::to_string(weights.height) + "x" +
                            std::to_string(weights.width) + " do not match features " +
                            current.shape_str());

    FeatureMap out(current.height, current.width, current.channels);
    for (int y = 0; y < current.height; ++y) {
        for (int x = 0; x < current.width; ++x) {
            const float wm = weights.mem_at(y, x);
            const float wc = weights.cur_at(y, x);
            const float* m = memory_warped.cell(y, x);
            const float* c = current.cell(y, x);
            float* o = out.cell(y, x);
            for (int ch = 0; ch < current.channels; ++ch) {
                const float lo = std::min(m[ch], c[ch]);
                const float hi = std::max(m[ch], c[ch]);
                o[ch] = std::clamp(wm * m[ch] + wc * c[ch], lo, hi);
            }
        }
    }
    return out;
}

FeaturePyramid aggregate_pyramid(const FeaturePyramid& memory, const FeaturePyramid& current,
                                 const FlowPyramid& flows, const EmbeddingConfig& config,
                                 bool apply_scale, PyramidAggregateStats* stats) {
    if (memory.level_count() != current.level_count() ||
        flows.level_count() != current.level_count())
        throw ContractError("aggregate_pyramid: level counts differ (memory " +
                            std::to_string(memory.level_count()) + ", current " +
                            std::to_string(current.level_count()) + ", flows " +
                            std::to_string(flows.level_count()) + ")");

    FeaturePyramid out;
    out.levels.reserve(current.level_count());
    for (std::size_t l = 0; l < current.level_count(); ++l) {
        if (!memory.levels[l].same_shape(current.levels[l]))
            throw ContractError("aggregate_pyramid: level " + std::to_string(l) + " memory " +
                                memory.levels[l].shape_str() + " does not match current " +
                                current.levels[l].shape_str());

        const std::int64_t t0 = now_ns();
        WarpResult warped = warp_feature(memory.levels[l], flows.flows[l]);
        FeatureMap aligned = apply_scale
                                 ? apply_scale_map(warped.warped, flows.scales[l])
                                 : std::move(warped.warped);
        const std::int64_t t1 = now_ns();
        const FeatureMap e_mem = embed_feature(aligned, config, static_cast<int>(l));
        const FeatureMap e_cur = embed_feature(current.levels[l], config, static_cast<int>(l));
        const std::int64_t t2 = now_ns();
        const WeightPair weights = similarity_weights(e_mem, e_cur);
        out.levels.push_back(aggregate_features(aligned, current.levels[l], weights));
        const std::int64_t t3 = now_ns();

        if (stats) {
            ++stats->aggregations;
            stats->warp_ns += t1 - t0;
            stats->embed_ns += t2 - t1;
            stats->fuse_ns += t3 - t2;
        }
    }
    return out;
}

} // namespace flowprop
