#include "flowprop/warp.hpp"

#include <chrono>
#include <cmath>

#include "flowprop/errors.hpp"

namespace flowprop {

namespace {

struct Taps {
    int x0, y0;      // floor of the sample point
    float fx, fy;    // fractional parts
};

inline Taps make_taps(float x, float y) {
    const float xf = std::floor(x);
    const float yf = std::floor(y);
    return {static_cast<int>(xf), static_cast<int>(yf), x - xf, y - yf};
}

inline bool in_x(const FeatureMap& f, int x) { return x >= 0 && x < f.width; }
inline bool in_y(const FeatureMap& f, int y) { return y >= 0 && y < f.height; }

inline std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Gathers one output cell. Returns whether all nonzero-weight taps were in bounds.
inline bool gather_cell(const FeatureMap& src, float x, float y, float* out, int channels) {
    const Taps t = make_taps(x, y);
    const float wx[2] = {1.0f - t.fx, t.fx};
    const float wy[2] = {1.0f - t.fy, t.fy};

    for (int c = 0; c < channels; ++c) out[c] = 0.0f;

    bool valid = true;
    for (int j = 0; j < 2; ++j) {
        if (wy[j] == 0.0f) continue;
        const int yy = t.y0 + j;
        for (int i = 0; i < 2; ++i) {
            if (wx[i] == 0.0f) continue;
            const int xx = t.x0 + i;
            if (!in_y(src, yy) || !in_x(src, xx)) {
                valid = false;
                continue; // zero padding
            }
            const float w = wy[j] * wx[i];
            const float* p = src.cell(yy, xx);
            for (int c = 0; c < channels; ++c) out[c] += w * p[c];
        }
    }
    return valid;
}

} // namespace

std::vector<float> bilinear_sample(const FeatureMap& feature, float x, float y) {
    std::vector<float> out(feature.channels, 0.0f);
    gather_cell(feature, x, y, out.data(), feature.channels);
    return out;
}

WarpResult warp_feature(const FeatureMap& key_feature, const FlowField& flow) {
    if (flow.height != key_feature.height || flow.width != key_feature.width)
        throw ContractError("warp_feature: flow " + flow.shape_str() + " does not match feature " +
                            key_feature.shape_str());

    WarpResult result;
    result.warped = FeatureMap(key_feature.height, key_feature.width, key_feature.channels);
    result.valid.assign(static_cast<std::size_t>(key_feature.height) * key_feature.width, 0);

    const int C = key_feature.channels;
    for (int y = 0; y < key_feature.height; ++y) {
        for (int x = 0; x < key_feature.width; ++x) {
            const float sx = static_cast<float>(x) + flow.dx(y, x);
            const float sy = static_cast<float>(y) + flow.dy(y, x);
            const Taps t = make_taps(sx, sy);
            bool ok;
            if (t.x0 >= 0 && t.x0 + 1 < key_feature.width && t.y0 >= 0 &&
                t.y0 + 1 < key_feature.height) {
                // all four taps in bounds; same product order as the slow path
                const float w00 = (1.0f - t.fy) * (1.0f - t.fx);
                const float w01 = (1.0f - t.fy) * t.fx;
                const float w10 = t.fy * (1.0f - t.fx);
                const float w11 = t.fy * t.fx;
                const float* p00 = key_feature.cell(t.y0, t.x0);
                const float* p01 = p00 + C;
                const float* p10 = key_feature.cell(t.y0 + 1, t.x0);
                const float* p11 = p10 + C;
                float* out = result.warped.cell(y, x);
                for (int c = 0; c < C; ++c)
                    out[c] = w00 * p00[c] + w01 * p01[c] + w10 * p10[c] + w11 * p11[c];
                ok = true;
            } else {
                ok = gather_cell(key_feature, sx, sy, result.warped.cell(y, x), C);
            }
            result.valid[static_cast<std::size_t>(y) * key_feature.width + x] = ok ? 1 : 0;
        }
    }
    return result;
}

FeatureMap apply_scale_map(const FeatureMap& feature, const ScaleMap& scale) {
    if (!scale.matches(feature))
        throw ContractError("apply_scale_map: scale " + scale.shape_str() +
                            " does not match feature " + feature.shape_str());
    FeatureMap out = feature;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= scale.data[i];
    return out;
}

std::pair<FeatureMap, FlowField> warp_backward(const FeatureMap& key_feature,
                                               const FlowField& flow,
                                               const FeatureMap& upstream) {
    if (flow.height != key_feature.height || flow.width != key_feature.width)
        throw ContractError("warp_backward: flow " + flow.shape_str() + " does not match feature " +
                            key_feature.shape_str());
    if (!upstream.same_shape(key_feature))
        throw ContractError("warp_backward: upstream " + upstream.shape_str() +
                            " does not match feature " + key_feature.shape_str());

    FeatureMap grad_feature(key_feature.height, key_feature.width, key_feature.channels, 0.0f);
    FlowField grad_flow(flow.height, flow.width, 0.0f);

    const int C = key_feature.channels;
    for (int y = 0; y < key_feature.height; ++y) {
        for (int x = 0; x < key_feature.width; ++x) {
            const float sx = static_cast<float>(x) + flow.dx(y, x);
            const float sy = static_cast<float>(y) + flow.dy(y, x);
            const Taps t = make_taps(sx, sy);
            const float wx[2] = {1.0f - t.fx, t.fx};
            const float wy[2] = {1.0f - t.fy, t.fy};
            // d(weight)/d(fx) per tap column, d/d(fy) per tap row
            const float dwx[2] = {-1.0f, 1.0f};
            const float dwy[2] = {-1.0f, 1.0f};

            const float* g = upstream.cell(y, x);
            float acc_dx = 0.0f;
            float acc_dy = 0.0f;
            for (int j = 0; j < 2; ++j) {
                const int yy = t.y0 + j;
                if (!in_y(key_feature, yy)) continue;
                for (int i = 0; i < 2; ++i) {
                    const int xx = t.x0 + i;
                    if (!in_x(key_feature, xx)) continue;
                    const float* f = key_feature.cell(yy, xx);
                    float* gf = grad_feature.cell(yy, xx);
                    const float w = wy[j] * wx[i];
                    const float ddx = wy[j] * dwx[i];
                    const float ddy = dwy[j] * wx[i];
                    for (int c = 0; c < C; ++c) {
                        gf[c] += w * g[c];          // scatter transpose of the gather
                        acc_dx += g[c] * ddx * f[c];
                        acc_dy += g[c] * ddy * f[c];
                    }
                }
            }
            grad_flow.dx(y, x) = acc_dx;
            grad_flow.dy(y, x) = acc_dy;
        }
    }
    return {std::move(grad_feature), std::move(grad_flow)};
}

FeaturePyramid warp_pyramid(const FeaturePyramid& key, std::span<const FlowField> flows,
                            std::span<const ScaleMap> scales, bool apply_scale,
                            PyramidWarpStats* stats,
                            std::vector<std::vector<std::uint8_t>>* valid_masks) {
    if (flows.size() != key.level_count())
        throw ContractError("warp_pyramid: " + std::to_string(flows.size()) + " flows for " +
                            std::to_string(key.level_count()) + " pyramid levels");
    if (apply_scale && scales.size() != key.level_count())
        throw ContractError("warp_pyramid: " + std::to_string(scales.size()) + " scale maps for " +
                            std::to_string(key.level_count()) + " pyramid levels");

    FeaturePyramid out;
    out.levels.reserve(key.level_count());
    if (valid_masks) valid_masks->clear();

    for (std::size_t l = 0; l < key.level_count(); ++l) {
        const std::int64_t t0 = now_ns();
        WarpResult r = warp_feature(key.levels[l], flows[l]);
        const std::int64_t t1 = now_ns();
        if (stats) {
            ++stats->warp_calls;
            stats->warp_ns += t1 - t0;
        }
        if (valid_masks) valid_masks->push_back(std::move(r.valid));

        if (apply_scale) {
            FeatureMap refined = apply_scale_map(r.warped, scales[l]);
            if (stats) {
                ++stats->scale_calls;
                stats->scale_ns += now_ns() - t1;
            }
            out.levels.push_back(std::move(refined));
        } else {
            out.levels.push_back(std::move(r.warped));
        }
    }
    return out;
}

} // namespace flowprop
