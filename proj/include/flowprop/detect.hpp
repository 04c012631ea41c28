#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "flowprop/extractor.hpp"
#include "flowprop/tensor.hpp"

namespace flowprop {

// Multi-scale single-shot detection head over the feature pyramid: a seeded
// linear projection per cell emits class logits and box offsets per anchor,
// offsets decode against the anchor grid, then score threshold and per-class
// greedy NMS. The head is untrained; it exists to exercise the full
// detection path deterministically.

// Corner box in normalized [0,1] image coordinates, x1 <= x2 and y1 <= y2.
struct Box {
    float x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

float iou(const Box& a, const Box& b);

struct Detection {
    Box box;
    int class_id = 0;
    float score = 0;
};

struct GroundTruth {
    Box box;
    int class_id = 0;
};

struct Anchor {
    float cx = 0, cy = 0, w = 0, h = 0; // normalized center/size
};

struct AnchorGrid {
    std::vector<std::vector<Anchor>> levels;

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& l : levels) n += l.size();
        return n;
    }
};

struct HeadConfig {
    std::uint64_t seed = 11;
    int class_count = 12;
    int anchors_per_cell = 4;
    // The head is a zero-bias random projection, so scores concentrate near
    // 0.5; a high threshold keeps the emitted set to the distribution tail.
    float score_threshold = 0.98f;
    float nms_iou_threshold = 0.45f;
};

// Anchors tiled over each level's cells: per cell `anchors_per_cell` boxes at
// the level's scale (linearly interpolated between scale_min and scale_max
// across levels) and a fixed aspect-ratio ladder.
AnchorGrid build_anchors(const std::vector<LevelDims>& level_dims, int anchors_per_cell,
                         float scale_min = 0.1f, float scale_max = 0.9f);

// center = anchor center + offset * anchor size; size = anchor size * exp(offset).
Box decode_box(const Anchor& anchor, const float offsets[4]);
void encode_box(const Anchor& anchor, const Box& box, float offsets[4]);

// Full head: project, squash class logits through the logistic function,
// decode, clamp to [0,1], threshold, per-class NMS. Deterministic per seed.
std::vector<Detection> predict(const FeaturePyramid& pyramid, const HeadConfig& head,
                               const AnchorGrid& anchors);

// Greedy descending-score suppression per class. Ties break by score, then
// lower class id, then lexicographic box, so output order is deterministic.
std::vector<Detection> nms(std::vector<Detection> detections, float iou_threshold);

// Deterministic global ordering used by NMS and the CSV writer.
bool detection_order(const Detection& a, const Detection& b);

struct EvalResult {
    std::vector<int> class_ids;      // classes present in ground truth
    std::vector<double> per_class_ap;
    double map = 0.0;
};

// Frame-level mean average precision: per class, rank detections by score
// across all frames, match greedily to unmatched ground truth at
// IoU >= threshold, integrate the interpolated precision envelope over recall
// (all-points interpolation). Throws EvaluationError when no ground truth
// exists at all.
EvalResult evaluate_frame_map(const std::vector<std::vector<Detection>>& detections_per_frame,
                              const std::vector<std::vector<GroundTruth>>& gt_per_frame,
                              double iou_threshold = 0.5);

// CSV with header frame_index,class_id,score,x1,y1,x2,y2; floats printed as
// 6-decimal fixed point; rows sorted by frame then detection_order.
void write_detections_csv(const std::vector<std::vector<Detection>>& detections_per_frame,
                          const std::filesystem::path& path);

} // namespace flowprop
