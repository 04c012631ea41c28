#include "flowprop/flow.hpp"

#include <algorithm>
#include <cmath>

#include "flowprop/errors.hpp"
#include "flowprop/resample.hpp"

namespace flowprop {

namespace {

// Candidate displacements ordered by (norm, dy, dx) so the first strict
// minimum encountered is the one closest to zero motion.
std::vector<std::pair<int, int>> candidate_order(int radius) {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1));
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) out.emplace_back(dy, dx);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        const int na = a.first * a.first + a.second * a.second;
        const int nb = b.first * b.first + b.second * b.second;
        if (na != nb) return na < nb;
        return a < b;
    });
    return out;
}

} // namespace

FlowEstimate estimate_flow(const Image& key_image, const Image& current_image,
                           const BlockMatchConfig& config, int grid_h, int grid_w) {
    if (!key_image.same_shape(current_image))
        throw ContractError("estimate_flow: key image " + key_image.shape_str() +
                            " does not match current image " + current_image.shape_str());
    if (config.block_radius < 1 || config.search_radius < 1)
        throw ContractError("estimate_flow: radii must be >= 1");
    if (config.texture_threshold < 0.0f)
        throw ContractError("estimate_flow: texture threshold must be >= 0");
    if (grid_h <= 0 || grid_w <= 0 || grid_h > key_image.height || grid_w > key_image.width)
        throw ContractError("estimate_flow: bad grid dims");

    const std::vector<float> key_ds =
        resample_area(key_image.data.data(), key_image.height, key_image.width, 3, grid_h, grid_w);
    const std::vector<float> cur_ds = resample_area(current_image.data.data(),
                                                    current_image.height, current_image.width, 3,
                                                    grid_h, grid_w);

    const int br = config.block_radius;
    const int sr = config.search_radius;
    const auto cell = [&](const std::vector<float>& img, int y, int x) {
        return img.data() + (static_cast<std::size_t>(y) * grid_w + x) * 3;
    };
    const auto candidates = candidate_order(sr);

    FlowEstimate est;
    est.flow = FlowField(grid_h, grid_w, 0.0f);
    est.scale = ScaleMap(grid_h, grid_w, 1, 1.0f);

    for (int y = 0; y < grid_h; ++y) {
        for (int x = 0; x < grid_w; ++x) {
            // Texture gate on the current block: flat content matches anything.
            double sum = 0.0, sq = 0.0;
            int n = 0;
            for (int by = std::max(0, y - br); by <= std::min(grid_h - 1, y + br); ++by) {
                for (int bx = std::max(0, x - br); bx <= std::min(grid_w - 1, x + br); ++bx) {
                    const float* p = cell(cur_ds, by, bx);
                    for (int c = 0; c < 3; ++c) {
                        sum += p[c];
                        sq += static_cast<double>(p[c]) * p[c];
                        ++n;
                    }
                }
            }
            const double mean = sum / n;
            const double var = sq / n - mean * mean;
            if (var < config.texture_threshold) continue; // zero flow

            double best = -1.0;
            int best_dy = 0, best_dx = 0;
            const int full = (2 * br + 1) * (2 * br + 1) * 3;
            for (const auto& [dy, dx] : candidates) {
                // overlap of the block with both frames, computed once
                const int y_lo = std::max({y - br, 0, -dy});
                const int y_hi = std::min({y + br, grid_h - 1, grid_h - 1 - dy});
                const int x_lo = std::max({x - br, 0, -dx});
                const int x_hi = std::min({x + br, grid_w - 1, grid_w - 1 - dx});
                if (y_lo > y_hi || x_lo > x_hi) continue;
                const int taps = (y_hi - y_lo + 1) * (x_hi - x_lo + 1) * 3;
                if (taps * 2 < full) continue; // window mostly out of bounds

                double sad = 0.0;
                for (int cy = y_lo; cy <= y_hi; ++cy) {
                    const float* c = cell(cur_ds, cy, x_lo);
                    const float* k = cell(key_ds, cy + dy, x_lo + dx);
                    const int n = (x_hi - x_lo + 1) * 3;
                    for (int i = 0; i < n; ++i) sad += std::abs(c[i] - k[i]);
                }
                const double cost = sad / taps;
                if (best < 0.0 || cost < best) {
                    best = cost;
                    best_dy = dy;
                    best_dx = dx;
                }
            }
            est.flow.dx(y, x) = static_cast<float>(best_dx);
            est.flow.dy(y, x) = static_cast<float>(best_dy);
        }
    }
    return est;
}

FlowField downscale_flow(const FlowField& flow, int target_h, int target_w) {
    if (target_h <= 0 || target_w <= 0)
        throw ContractError("downscale_flow: target dims must be positive");
    if (target_h > flow.height || target_w > flow.width)
        throw ContractError("downscale_flow: target " + std::to_string(target_h) + "x" +
                            std::to_string(target_w) + " exceeds source " + flow.shape_str());

    std::vector<float> pooled =
        resample_area(flow.data.data(), flow.height, flow.width, 2, target_h, target_w);
    const float rx = static_cast<float>(target_w) / static_cast<float>(flow.width);
    const float ry = static_cast<float>(target_h) / static_cast<float>(flow.height);

    FlowField out(target_h, target_w);
    for (int y = 0; y < target_h; ++y) {
        for (int x = 0; x < target_w; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * target_w + x) * 2;
            out.dx(y, x) = pooled[i] * rx;     // re-express in target cell units
            out.dy(y, x) = pooled[i + 1] * ry;
        }
    }
    return out;
}

ScaleMap downscale_scale_map(const ScaleMap& scale, int target_h, int target_w) {
    if (target_h <= 0 || target_w <= 0)
        throw ContractError("downscale_scale_map: target dims must be positive");
    ScaleMap out(target_h, target_w, scale.channels);
    out.data = resample_area(scale.data.data(), scale.height, scale.width, scale.channels,
                             target_h, target_w);
    return out;
}

FlowPyramid build_flow_pyramid(const FlowEstimate& base, const std::vector<LevelDims>& level_dims) {
    if (level_dims.empty()) throw ContractError("build_flow_pyramid: no target levels");
    FlowPyramid pyramid;
    for (const LevelDims& d : level_dims) {
        if (d.height > base.flow.height || d.width > base.flow.width)
            throw ContractError("build_flow_pyramid: level " + std::to_string(d.height) + "x" +
                                std::to_string(d.width) + " exceeds base flow " +
                                base.flow.shape_str());
        pyramid.flows.push_back(downscale_flow(base.flow, d.height, d.width));

        ScaleMap pooled = downscale_scale_map(base.scale, d.height, d.width);
        if (pooled.channels == d.channels) {
            pyramid.scales.push_back(std::move(pooled));
        } else if (pooled.channels == 1) {
            ScaleMap broadcast(d.height, d.width, d.channels);
            for (int y = 0; y < d.height; ++y)
                for (int x = 0; x < d.width; ++x) {
                    const float v = pooled.at(y, x, 0);
                    for (int c = 0; c < d.channels; ++c) broadcast.at(y, x, c) = v;
                }
            pyramid.scales.push_back(std::move(broadcast));
        } else {
            throw ContractError("build_flow_pyramid: scale map has " +
                                std::to_string(pooled.channels) + " channels, level needs " +
                                std::to_string(d.channels) + " (or 1 to broadcast)");
        }
    }
    return pyramid;
}

} // namespace flowprop
