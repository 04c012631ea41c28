#include "flowprop/tensor.hpp"

#include <cmath>

#include "flowprop/errors.hpp"

namespace flowprop {

namespace {

std::string dims3(int h, int w, int c) {
    return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
}

} // namespace

Image::Image(int h, int w, float fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

std::string Image::shape_str() const { return dims3(height, width, 3); }

void Image::validate() const {
    if (height <= 0 || width <= 0)
        throw ContractError("image dims must be positive, got " + shape_str());
    if (data.size() != static_cast<std::size_t>(height) * width * 3)
        throw ContractError("image data length " + std::to_string(data.size()) +
                            " does not match shape " + shape_str());
    for (float v : data) {
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
            throw ContractError("image values must be finite and within [0,1]");
    }
}

FeatureMap::FeatureMap(int h, int w, int c, float fill)
    : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {}

std::string FeatureMap::shape_str() const { return dims3(height, width, channels); }

FlowField::FlowField(int h, int w, float fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w * 2, fill) {}

std::string FlowField::shape_str() const { return dims3(height, width, 2); }

ScaleMap::ScaleMap(int h, int w, int c, float fill)
    : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {}

std::string ScaleMap::shape_str() const { return dims3(height, width, channels); }

void FeaturePyramid::validate() const {
    if (levels.empty()) throw ContractError("feature pyramid must have at least one level");
    for (std::size_t i = 1; i < levels.size(); ++i) {
        const auto area = [](const FeatureMap& m) {
            return static_cast<long>(m.height) * m.width;
        };
        if (area(levels[i]) >= area(levels[i - 1]))
            throw ContractError("pyramid level " + std::to_string(i) + " (" + levels[i].shape_str() +
                                ") is not spatially smaller than level " + std::to_string(i - 1) +
                                " (" + levels[i - 1].shape_str() + ")");
    }
}

} // namespace flowprop
