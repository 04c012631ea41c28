#pragma once

#include <filesystem>
#include <string>

#include "flowprop/rng.hpp"
#include "flowprop/tensor.hpp"

namespace testutil {

inline flowprop::FeatureMap random_map(flowprop::Rng& rng, int h, int w, int c, float lo = -1.0f,
                                       float hi = 1.0f) {
    flowprop::FeatureMap m(h, w, c);
    for (float& v : m.data) v = rng.uniform_float(lo, hi);
    return m;
}

inline flowprop::FlowField random_flow(flowprop::Rng& rng, int h, int w, float radius) {
    flowprop::FlowField f(h, w);
    for (float& v : f.data) v = rng.uniform_float(-radius, radius);
    return f;
}

inline flowprop::ScaleMap random_scale(flowprop::Rng& rng, int h, int w, int c) {
    flowprop::ScaleMap s(h, w, c);
    for (float& v : s.data) v = rng.uniform_float(0.0f, 2.0f);
    return s;
}

inline flowprop::Image random_image(flowprop::Rng& rng, int h, int w) {
    flowprop::Image img(h, w);
    for (float& v : img.data) v = rng.uniform_float();
    return img;
}

// Fresh per-test scratch directory under the build tree.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("flowprop_test_" + tag + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace testutil
