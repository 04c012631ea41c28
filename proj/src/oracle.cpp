#include "flowprop/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "flowprop/warp.hpp"

namespace flowprop {
namespace oracle {

FeatureMap warp_reference(const FeatureMap& source, const FlowField& flow) {
    FeatureMap out(source.height, source.width, source.channels, 0.0f);
    for (int y = 0; y < source.height; ++y) {
        for (int x = 0; x < source.width; ++x) {
            const double sx = x + static_cast<double>(flow.dx(y, x));
            const double sy = y + static_cast<double>(flow.dy(y, x));
            for (int qy = 0; qy < source.height; ++qy) {
                for (int qx = 0; qx < source.width; ++qx) {
                    const double g = std::max(0.0, 1.0 - std::abs(sx - qx)) *
                                     std::max(0.0, 1.0 - std::abs(sy - qy));
                    if (g == 0.0) continue;
                    for (int c = 0; c < source.channels; ++c)
                        out.at(y, x, c) += static_cast<float>(g * source.at(qy, qx, c));
                }
            }
        }
    }
    return out;
}

FeatureMap scale_reference(const FeatureMap& feature, const ScaleMap& scale) {
    FeatureMap out(feature.height, feature.width, feature.channels);
    for (int y = 0; y < feature.height; ++y)
        for (int x = 0; x < feature.width; ++x)
            for (int c = 0; c < feature.channels; ++c)
                out.at(y, x, c) = feature.at(y, x, c) * scale.at(y, x, c);
    return out;
}

FeatureMap aggregate_reference(const FeatureMap& memory, const FeatureMap& current,
                               const std::vector<float>& w_mem, const std::vector<float>& w_cur) {
    FeatureMap out(current.height, current.width, current.channels);
    for (int y = 0; y < current.height; ++y) {
        for (int x = 0; x < current.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * current.width + x;
            for (int c = 0; c < current.channels; ++c)
                out.at(y, x, c) = w_mem[i] * memory.at(y, x, c) + w_cur[i] * current.at(y, x, c);
        }
    }
    return out;
}

namespace {

// Double-precision zero-padded bilinear gather, independent of the float
// production kernel so the finite differences are not polluted by float
// rounding at step sizes like 1e-3.
double sample_double(const std::vector<double>& data, int h, int w, int channels, double x,
                     double y, int c) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    double sum = 0.0;
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
            const int xx = x0 + i;
            const int yy = y0 + j;
            if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
            const double weight = (1.0 - std::abs(x - xx)) * (1.0 - std::abs(y - yy));
            if (weight <= 0.0) continue;
            sum += weight * data[(static_cast<std::size_t>(yy) * w + xx) * channels + c];
        }
    }
    return sum;
}

double loss_double(const std::vector<double>& feature, int h, int w, int channels,
                   const std::vector<double>& flow, const FeatureMap& upstream) {
    double sum = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t cell = static_cast<std::size_t>(y) * w + x;
            const double sx = x + flow[cell * 2];
            const double sy = y + flow[cell * 2 + 1];
            for (int c = 0; c < channels; ++c)
                sum += upstream.data[cell * channels + c] *
                       sample_double(feature, h, w, channels, sx, sy, c);
        }
    return sum;
}

} // namespace

std::pair<FeatureMap, FlowField> warp_gradients_fd(const FeatureMap& source,
                                                   const FlowField& flow,
                                                   const FeatureMap& upstream, float step) {
    const int h = source.height, w = source.width, c = source.channels;
    std::vector<double> feature(source.data.begin(), source.data.end());
    std::vector<double> motion(flow.data.begin(), flow.data.end());
    const double hstep = static_cast<double>(step);

    FeatureMap grad_feature(h, w, c);
    for (std::size_t i = 0; i < feature.size(); ++i) {
        std::vector<double> plus = feature;
        std::vector<double> minus = feature;
        plus[i] += hstep;
        minus[i] -= hstep;
        grad_feature.data[i] = static_cast<float>((loss_double(plus, h, w, c, motion, upstream) -
                                                   loss_double(minus, h, w, c, motion, upstream)) /
                                                  (2.0 * hstep));
    }

    FlowField grad_flow(flow.height, flow.width);
    for (std::size_t i = 0; i < motion.size(); ++i) {
        std::vector<double> plus = motion;
        std::vector<double> minus = motion;
        plus[i] += hstep;
        minus[i] -= hstep;
        grad_flow.data[i] = static_cast<float>((loss_double(feature, h, w, c, plus, upstream) -
                                                loss_double(feature, h, w, c, minus, upstream)) /
                                               (2.0 * hstep));
    }
    return {std::move(grad_feature), std::move(grad_flow)};
}

std::vector<Detection> nms_reference(std::vector<Detection> detections, float iou_threshold) {
    // No sort: repeatedly scan for the highest-priority live detection, keep
    // it, and kill everything of its class it overlaps.
    std::vector<bool> dead(detections.size(), false);
    std::vector<Detection> kept;
    for (;;) {
        int best = -1;
        for (std::size_t i = 0; i < detections.size(); ++i) {
            if (dead[i]) continue;
            if (best < 0 || detection_order(detections[i], detections[best]))
                best = static_cast<int>(i);
        }
        if (best < 0) break;
        kept.push_back(detections[best]);
        for (std::size_t i = 0; i < detections.size(); ++i) {
            if (dead[i]) continue;
            if (detections[i].class_id == detections[best].class_id &&
                iou(detections[i].box, detections[best].box) > iou_threshold)
                dead[i] = true;
        }
        dead[best] = true;
    }
    return kept;
}

} // namespace oracle
} // namespace flowprop
