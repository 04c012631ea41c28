#include "flowprop/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include "flowprop/errors.hpp"
#include "flowprop/rng.hpp"

namespace flowprop {

float iou(const Box& a, const Box& b) {
    const float ix1 = std::max(a.x1, b.x1);
    const float iy1 = std::max(a.y1, b.y1);
    const float ix2 = std::min(a.x2, b.x2);
    const float iy2 = std::min(a.y2, b.y2);
    const float iw = std::max(0.0f, ix2 - ix1);
    const float ih = std::max(0.0f, iy2 - iy1);
    const float inter = iw * ih;
    const float area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
    const float area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
    const float uni = area_a + area_b - inter;
    if (uni <= 0.0f) return 0.0f;
    return inter / uni;
}

AnchorGrid build_anchors(const std::vector<LevelDims>& level_dims, int anchors_per_cell,
                         float scale_min, float scale_max) {
    if (level_dims.empty()) throw ContractError("build_anchors: no levels");
    if (anchors_per_cell < 1) throw ContractError("build_anchors: anchors_per_cell must be >= 1");

    static constexpr float kAspects[] = {1.0f, 2.0f, 0.5f, 3.0f, 1.0f / 3.0f, 1.0f};
    const int max_aspects = static_cast<int>(std::size(kAspects));
    if (anchors_per_cell > max_aspects)
        throw ContractError("build_anchors: at most " + std::to_string(max_aspects) +
                            " anchors per cell");

    AnchorGrid grid;
    const int L = static_cast<int>(level_dims.size());
    for (int l = 0; l < L; ++l) {
        const LevelDims& d = level_dims[l];
        const float scale =
            (L == 1) ? scale_min : scale_min + (scale_max - scale_min) * l / (L - 1.0f);
        std::vector<Anchor> anchors;
        anchors.reserve(static_cast<std::size_t>(d.height) * d.width * anchors_per_cell);
        for (int y = 0; y < d.height; ++y) {
            for (int x = 0; x < d.width; ++x) {
                const float cx = (x + 0.5f) / d.width;
                const float cy = (y + 0.5f) / d.height;
                for (int a = 0; a < anchors_per_cell; ++a) {
                    const float r = kAspects[a];
                    anchors.push_back({cx, cy, scale * std::sqrt(r), scale / std::sqrt(r)});
                }
            }
        }
        grid.levels.push_back(std::move(anchors));
    }
    return grid;
}

Box decode_box(const Anchor& anchor, const float offsets[4]) {
    const float cx = anchor.cx + offsets[0] * anchor.w;
    const float cy = anchor.cy + offsets[1] * anchor.h;
    const float w = anchor.w * std::exp(offsets[2]);
    const float h = anchor.h * std::exp(offsets[3]);
    return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

void encode_box(const Anchor& anchor, const Box& box, float offsets[4]) {
    const float cx = (box.x1 + box.x2) / 2;
    const float cy = (box.y1 + box.y2) / 2;
    offsets[0] = (cx - anchor.cx) / anchor.w;
    offsets[1] = (cy - anchor.cy) / anchor.h;
    offsets[2] = std::log((box.x2 - box.x1) / anchor.w);
    offsets[3] = std::log((box.y2 - box.y1) / anchor.h);
}

std::vector<Detection> predict(const FeaturePyramid& pyramid, const HeadConfig& head,
                               const AnchorGrid& anchors) {
    if (pyramid.level_count() != anchors.levels.size())
        throw ContractError("predict: pyramid has " + std::to_string(pyramid.level_count()) +
                            " levels, anchor grid has " + std::to_string(anchors.levels.size()));

    const int A = head.anchors_per_cell;
    const int per_anchor = head.class_count + 4;
    std::vector<Detection> raw;

    for (std::size_t l = 0; l < pyramid.level_count(); ++l) {
        const FeatureMap& f = pyramid.levels[l];
        if (anchors.levels[l].size() != static_cast<std::size_t>(f.height) * f.width * A)
            throw ContractError("predict: anchor count mismatch at level " + std::to_string(l));

        // Seeded projection, zero bias: logits scale like the features, so the
        // untrained head emits mid-range scores rather than saturating.
        const int out_dim = A * per_anchor;
        Rng rng = Rng::fork(head.seed, l);
        const float a = 4.0f / std::sqrt(static_cast<float>(f.channels));
        std::vector<float> w(static_cast<std::size_t>(f.channels) * out_dim);
        for (float& v : w) v = rng.uniform_float(-a, a);

        std::vector<float> logits(out_dim);
        for (int y = 0; y < f.height; ++y) {
            for (int x = 0; x < f.width; ++x) {
                std::fill(logits.begin(), logits.end(), 0.0f);
                const float* src = f.cell(y, x);
                for (int c = 0; c < f.channels; ++c) {
                    const float v = src[c];
                    const float* wp = w.data() + static_cast<std::size_t>(c) * out_dim;
                    for (int o = 0; o < out_dim; ++o) logits[o] += v * wp[o];
                }
                const std::size_t cell_index = (static_cast<std::size_t>(y) * f.width + x) * A;
                for (int an = 0; an < A; ++an) {
                    const float* slot = logits.data() + static_cast<std::size_t>(an) * per_anchor;
                    const Anchor& anchor = anchors.levels[l][cell_index + an];
                    Box box = decode_box(anchor, slot + head.class_count);
                    box.x1 = std::clamp(box.x1, 0.0f, 1.0f);
                    box.y1 = std::clamp(box.y1, 0.0f, 1.0f);
                    box.x2 = std::clamp(box.x2, box.x1, 1.0f);
                    box.y2 = std::clamp(box.y2, box.y1, 1.0f);
                    for (int k = 0; k < head.class_count; ++k) {
                        const float score = 1.0f / (1.0f + std::exp(-slot[k]));
                        if (score >= head.score_threshold) raw.push_back({box, k, score});
                    }
                }
            }
        }
    }
    return nms(std::move(raw), head.nms_iou_threshold);
}

bool detection_order(const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    return std::tie(a.box.x1, a.box.y1, a.box.x2, a.box.y2) <
           std::tie(b.box.x1, b.box.y1, b.box.x2, b.box.y2);
}

std::vector<Detection> nms(std::vector<Detection> detections, float iou_threshold) {
    std::sort(detections.begin(), detections.end(), detection_order);
    std::vector<Detection> kept;
    for (const Detection& d : detections) {
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (k.class_id == d.class_id && iou(k.box, d.box) > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

EvalResult evaluate_frame_map(const std::vector<std::vector<Detection>>& detections_per_frame,
                              const std::vector<std::vector<GroundTruth>>& gt_per_frame,
                              double iou_threshold) {
    if (detections_per_frame.size() != gt_per_frame.size())
        throw ContractError("evaluate_frame_map: frame counts differ");

    std::map<int, int> gt_count;
    for (const auto& frame : gt_per_frame)
        for (const GroundTruth& g : frame) ++gt_count[g.class_id];
    if (gt_count.empty()) throw EvaluationError("evaluate_frame_map: ground truth is empty");

    EvalResult result;
    for (const auto& [class_id, total_gt] : gt_count) {
        struct Ranked {
            float score;
            int frame;
            Box box;
        };
        std::vector<Ranked> ranked;
        for (std::size_t f = 0; f < detections_per_frame.size(); ++f)
            for (const Detection& d : detections_per_frame[f])
                if (d.class_id == class_id) ranked.push_back({d.score, static_cast<int>(f), d.box});
        std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.frame != b.frame) return a.frame < b.frame;
            return std::tie(a.box.x1, a.box.y1, a.box.x2, a.box.y2) <
                   std::tie(b.box.x1, b.box.y1, b.box.x2, b.box.y2);
        });

        std::vector<std::vector<bool>> matched(gt_per_frame.size());
        for (std::size_t f = 0; f < gt_per_frame.size(); ++f)
            matched[f].assign(gt_per_frame[f].size(), false);

        std::vector<bool> is_tp(ranked.size(), false);
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            const Ranked& r = ranked[i];
            double best_iou = 0.0;
            int best_gt = -1;
            const auto& gts = gt_per_frame[r.frame];
            for (std::size_t g = 0; g < gts.size(); ++g) {
                if (gts[g].class_id != class_id || matched[r.frame][g]) continue;
                const double v = iou(r.box, gts[g].box);
                if (v > best_iou) {
                    best_iou = v;
                    best_gt = static_cast<int>(g);
                }
            }
            if (best_gt >= 0 && best_iou >= iou_threshold) {
                is_tp[i] = true;
                matched[r.frame][best_gt] = true;
            }
        }

        // All-points interpolation: integrate the running precision envelope
        // over recall.
        std::vector<double> precision(ranked.size()), recall(ranked.size());
        int tp = 0;
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            if (is_tp[i]) ++tp;
            precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
            recall[i] = static_cast<double>(tp) / total_gt;
        }
        for (std::size_t i = ranked.size(); i-- > 1;)
            precision[i - 1] = std::max(precision[i - 1], precision[i]);

        double ap = 0.0;
        double prev_recall = 0.0;
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            ap += (recall[i] - prev_recall) * precision[i];
            prev_recall = recall[i];
        }

        result.class_ids.push_back(class_id);
        result.per_class_ap.push_back(ap);
    }

    double sum = 0.0;
    for (double ap : result.per_class_ap) sum += ap;
    result.map = sum / static_cast<double>(result.per_class_ap.size());
    return result;
}

void write_detections_csv(const std::vector<std::vector<Detection>>& detections_per_frame,
                          const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw FormatError("cannot open '" + path.string() + "' for writing", 0);
    f << "frame_index,class_id,score,x1,y1,x2,y2\n";
    char line[160];
    for (std::size_t frame = 0; frame < detections_per_frame.size(); ++frame) {
        std::vector<Detection> sorted = detections_per_frame[frame];
        std::sort(sorted.begin(), sorted.end(), detection_order);
        for (const Detection& d : sorted) {
            std::snprintf(line, sizeof(line), "%zu,%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", frame,
                          d.class_id, d.score, d.box.x1, d.box.y1, d.box.x2, d.box.y2);
            f << line;
        }
    }
}

} // namespace flowprop
