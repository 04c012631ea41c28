#include "flowprop/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowprop/errors.hpp"
#include "flowprop/rng.hpp"

namespace flowprop {

namespace {

// Valid-conv geometry from input extent I to output extent O:
// choose the largest stride that still fits, then the kernel follows from
// (I - k) / s + 1 = O. Guarantees k >= 1 for any 1 <= O <= I.
void derive_conv(int in, int out, int& kernel, int& stride) {
    if (out < 1 || out > in)
        throw ConfigError("level extent " + std::to_string(out) + " does not fit input extent " +
                          std::to_string(in));
    stride = (out == 1) ? 1 : (in - 1) / (out - 1);
    kernel = in - (out - 1) * stride;
}

} // namespace

ExtractorConfig ExtractorConfig::ssd300(std::uint64_t seed, std::vector<int> channels) {
    static constexpr int kDims[5] = {38, 19, 10, 5, 3};
    ExtractorConfig cfg;
    cfg.seed = seed;
    cfg.input_height = 300;
    cfg.input_width = 300;
    if (channels.size() != 5) throw ConfigError("ssd300 preset needs 5 channel counts");
    for (int i = 0; i < 5; ++i) cfg.levels.push_back({kDims[i], kDims[i], channels[i]});
    return cfg;
}

ToyExtractor::ToyExtractor(ExtractorConfig config) : config_(std::move(config)) {
    if (config_.levels.empty()) throw ConfigError("extractor needs at least one level");
    if (config_.input_height <= 0 || config_.input_width <= 0)
        throw ConfigError("extractor input size must be positive");

    int prev_h = config_.input_height;
    int prev_w = config_.input_width;
    int prev_c = Image::channels;
    int jump_y = 1, jump_x = 1; // input pixels per cell step on the previous grid
    int rf_h = 1, rf_w = 1;

    for (std::size_t l = 0; l < config_.levels.size(); ++l) {
        const LevelDims& d = config_.levels[l];
        if (d.channels <= 0) throw ConfigError("level channel count must be positive");
        if (l > 0 && static_cast<long>(d.height) * d.width >=
                         static_cast<long>(prev_h) * prev_w)
            throw ConfigError("pyramid level " + std::to_string(l) +
                              " must be spatially smaller than its predecessor");

        LevelGeometry g;
        derive_conv(prev_h, d.height, g.kernel_h, g.stride_h);
        derive_conv(prev_w, d.width, g.kernel_w, g.stride_w);
        rf_h += (g.kernel_h - 1) * jump_y;
        rf_w += (g.kernel_w - 1) * jump_x;
        jump_y *= g.stride_h;
        jump_x *= g.stride_w;
        g.pixel_stride_y = jump_y;
        g.pixel_stride_x = jump_x;
        g.receptive_h = rf_h;
        g.receptive_w = rf_w;
        geometry_.push_back(g);

        const int fan_in = g.kernel_h * g.kernel_w * prev_c;
        const float a = std::sqrt(6.0f / static_cast<float>(fan_in));
        Rng rng = Rng::fork(config_.seed, l);
        std::vector<float> w(static_cast<std::size_t>(fan_in) * d.channels);
        for (float& v : w) v = rng.uniform_float(-a, a);
        weights_.push_back(std::move(w));

        std::vector<std::vector<float>> mixers;
        const float am = std::sqrt(6.0f / static_cast<float>(d.channels));
        for (int m = 0; m < std::max(0, config_.mixing_layers); ++m) {
            std::vector<float> mw(static_cast<std::size_t>(d.channels) * d.channels);
            for (float& v : mw) v = rng.uniform_float(-am, am);
            mixers.push_back(std::move(mw));
        }
        mixing_.push_back(std::move(mixers));

        prev_h = d.height;
        prev_w = d.width;
        prev_c = d.channels;
    }
}

FeaturePyramid ToyExtractor::extract(const Image& image) const {
    if (image.height != config_.input_height || image.width != config_.input_width)
        throw ConfigError("extractor input is " + std::to_string(config_.input_height) + "x" +
                          std::to_string(config_.input_width) + ", got image " + image.shape_str());

    FeaturePyramid pyramid;
    pyramid.levels.reserve(config_.levels.size());

    const float* in = image.data.data();
    int in_w = image.width;
    int in_c = Image::channels;

    for (std::size_t l = 0; l < config_.levels.size(); ++l) {
        const LevelDims& d = config_.levels[l];
        const LevelGeometry& g = geometry_[l];
        const float* w = weights_[l].data();
        FeatureMap out(d.height, d.width, d.channels);

        std::vector<float> acc(d.channels);
        for (int y = 0; y < d.height; ++y) {
            for (int x = 0; x < d.width; ++x) {
                std::fill(acc.begin(), acc.end(), 0.0f);
                const int iy0 = y * g.stride_h;
                const int ix0 = x * g.stride_w;
                for (int ky = 0; ky < g.kernel_h; ++ky) {
                    for (int kx = 0; kx < g.kernel_w; ++kx) {
                        const float* src =
                            in + (static_cast<std::size_t>(iy0 + ky) * in_w + (ix0 + kx)) * in_c;
                        const float* wp =
                            w + (static_cast<std::size_t>(ky) * g.kernel_w + kx) *
                                    static_cast<std::size_t>(in_c) * d.channels;
                        for (int ic = 0; ic < in_c; ++ic) {
                            const float v = src[ic];
                            const float* wq = wp + static_cast<std::size_t>(ic) * d.channels;
                            for (int oc = 0; oc < d.channels; ++oc) acc[oc] += v * wq[oc];
                        }
                    }
                }
                float* dst = out.cell(y, x);
                for (int oc = 0; oc < d.channels; ++oc) dst[oc] = std::max(0.0f, acc[oc]);
            }
        }

        // pointwise channel mixing keeps the grid untouched
        std::vector<float> mixed(d.channels);
        for (const std::vector<float>& mw : mixing_[l]) {
            for (int y = 0; y < d.height; ++y) {
                for (int x = 0; x < d.width; ++x) {
                    float* cell = out.cell(y, x);
                    std::fill(mixed.begin(), mixed.end(), 0.0f);
                    for (int ic = 0; ic < d.channels; ++ic) {
                        const float v = cell[ic];
                        const float* wq = mw.data() + static_cast<std::size_t>(ic) * d.channels;
                        for (int oc = 0; oc < d.channels; ++oc) mixed[oc] += v * wq[oc];
                    }
                    for (int oc = 0; oc < d.channels; ++oc) cell[oc] = std::max(0.0f, mixed[oc]);
                }
            }
        }
        pyramid.levels.push_back(std::move(out));
        in = pyramid.levels.back().data.data();
        in_w = d.width;
        in_c = d.channels;
    }
    return pyramid;
}

int ToyExtractor::interior_margin(std::size_t level) const {
    const LevelGeometry& g = geometry_[level];
    const int my = (g.receptive_h + g.pixel_stride_y - 1) / g.pixel_stride_y;
    const int mx = (g.receptive_w + g.pixel_stride_x - 1) / g.pixel_stride_x;
    return std::max(my, mx);
}

FeaturePyramid toy_extract(const Image& image, const ExtractorConfig& config) {
    return ToyExtractor(config).extract(image);
}

} // namespace flowprop
