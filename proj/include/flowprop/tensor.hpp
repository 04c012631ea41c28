#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace flowprop {

// All dense grids share one memory convention: row-major, channel-last.
//   index(y, x, c) = (y * width + x) * channels + c
// Stated here once; every kernel and the binary tensor format rely on it.

// RGB frame with values in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> data; // height * width * 3

    Image() = default;
    Image(int h, int w, float fill = 0.0f);

    static constexpr int channels = 3;

    float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    bool same_shape(const Image& o) const { return height == o.height && width == o.width; }
    std::string shape_str() const;
    // Checks dims, length, finiteness and the [0,1] range.
    void validate() const;
};

// Dense activation grid, C channels per cell.
struct FeatureMap {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data; // height * width * channels

    FeatureMap() = default;
    FeatureMap(int h, int w, int c, float fill = 0.0f);

    float& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    const float* cell(int y, int x) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
    }
    float* cell(int y, int x) {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
    }

    std::size_t size() const { return data.size(); }
    bool same_shape(const FeatureMap& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
    std::string shape_str() const;
};

// Per-cell 2-vector displacement (dx, dy), in units of this grid's own cells.
// Positive x points right, positive y points down. A displacement stored at p
// means the source content for p sits at p + (dx, dy).
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> data; // height * width * 2, (dx, dy) per cell

    FlowField() = default;
    FlowField(int h, int w, float fill = 0.0f);

    float& dx(int y, int x) { return data[(static_cast<std::size_t>(y) * width + x) * 2]; }
    float dx(int y, int x) const { return data[(static_cast<std::size_t>(y) * width + x) * 2]; }
    float& dy(int y, int x) { return data[(static_cast<std::size_t>(y) * width + x) * 2 + 1]; }
    float dy(int y, int x) const { return data[(static_cast<std::size_t>(y) * width + x) * 2 + 1]; }

    bool same_shape(const FlowField& o) const { return height == o.height && width == o.width; }
    std::string shape_str() const;
};

// Per-cell, per-channel multiplicative refinement. Shape mirrors the feature
// map it refines; values are nonnegative.
struct ScaleMap {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    ScaleMap() = default;
    ScaleMap(int h, int w, int c, float fill = 1.0f);

    float& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool matches(const FeatureMap& f) const {
        return height == f.height && width == f.width && channels == f.channels;
    }
    std::string shape_str() const;
};

// Ordered multi-scale feature stack; spatial dims strictly decrease per level.
struct FeaturePyramid {
    std::vector<FeatureMap> levels;

    std::size_t level_count() const { return levels.size(); }
    // Throws ContractError when spatial monotonicity or non-emptiness is violated.
    void validate() const;
};

} // namespace flowprop
