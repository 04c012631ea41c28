#include "flowprop/resample.hpp"

#include <algorithm>
#include <cmath>

#include "flowprop/errors.hpp"

namespace flowprop {

namespace {

struct Tap {
    int index;
    double weight;
};

// Overlap weights of target cell i with source cells, along one axis.
std::vector<std::vector<Tap>> axis_taps(int src, int dst) {
    const double ratio = static_cast<double>(src) / dst;
    std::vector<std::vector<Tap>> taps(dst);
    for (int i = 0; i < dst; ++i) {
        const double lo = i * ratio;
        const double hi = (i + 1) * ratio;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int s = first; s <= last; ++s) {
            const double overlap = std::min(hi, static_cast<double>(s + 1)) -
                                   std::max(lo, static_cast<double>(s));
            if (overlap > 0.0) taps[i].push_back({s, overlap / ratio});
        }
    }
    return taps;
}

} // namespace

std::vector<float> resample_area(const float* src, int src_h, int src_w, int channels,
                                 int dst_h, int dst_w) {
    if (dst_h <= 0 || dst_w <= 0)
        throw ContractError("resample target dims must be positive");
    if (dst_h > src_h || dst_w > src_w)
        throw ContractError("resample target " + std::to_string(dst_h) + "x" +
                            std::to_string(dst_w) + " exceeds source " + std::to_string(src_h) +
                            "x" + std::to_string(src_w));

    const auto rows = axis_taps(src_h, dst_h);
    const auto cols = axis_taps(src_w, dst_w);

    std::vector<float> out(static_cast<std::size_t>(dst_h) * dst_w * channels, 0.0f);
    std::vector<double> acc(channels);
    for (int i = 0; i < dst_h; ++i) {
        for (int j = 0; j < dst_w; ++j) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (const Tap& r : rows[i]) {
                for (const Tap& c : cols[j]) {
                    const double w = r.weight * c.weight;
                    const float* p = src + (static_cast<std::size_t>(r.index) * src_w + c.index) * channels;
                    for (int ch = 0; ch < channels; ++ch) acc[ch] += w * p[ch];
                }
            }
            float* q = out.data() + (static_cast<std::size_t>(i) * dst_w + j) * channels;
            for (int ch = 0; ch < channels; ++ch) q[ch] = static_cast<float>(acc[ch]);
        }
    }
    return out;
}

} // namespace flowprop
