#pragma once

#include <utility>
#include <vector>

#include "flowprop/detect.hpp"
#include "flowprop/tensor.hpp"

namespace flowprop {
namespace oracle {

// Deliberately naive reference implementations. They share nothing with the
// production kernels they check: the warp reference expands the full
// all-pairs interpolation sum, NMS re-tests every kept pair, gradients come
// from central differences. The `verify` CLI subcommand and the test suites
// drive them.

// warped(p, c) = sum over every source cell q of G(q, p + flow(p)) * f(q, c)
// where G is the separable bilinear kernel max(0, 1-|dx|) * max(0, 1-|dy|).
FeatureMap warp_reference(const FeatureMap& source, const FlowField& flow);

// Element-wise product reference.
FeatureMap scale_reference(const FeatureMap& feature, const ScaleMap& scale);

// Convex fusion reference: w_mem(p) * mem(p,c) + w_cur(p) * cur(p,c).
FeatureMap aggregate_reference(const FeatureMap& memory, const FeatureMap& current,
                               const std::vector<float>& w_mem, const std::vector<float>& w_cur);

// Central finite differences of L = sum(upstream * warp(source, flow)) with
// respect to the source feature and the flow components.
std::pair<FeatureMap, FlowField> warp_gradients_fd(const FeatureMap& source,
                                                   const FlowField& flow,
                                                   const FeatureMap& upstream, float step);

// Quadratic-time NMS with the same deterministic tie-break contract.
std::vector<Detection> nms_reference(std::vector<Detection> detections, float iou_threshold);

} // namespace oracle
} // namespace flowprop
