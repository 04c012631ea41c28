#include "flowprop/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "flowprop/errors.hpp"
#include "flowprop/rng.hpp"
#include "flowprop/tensor_io.hpp"

namespace flowprop {

namespace {

constexpr std::uint64_t kBackgroundStream = 0x9a7;
constexpr std::uint64_t kNoiseStreamBase = 0x51e;

struct PixelBox {
    double x1, y1, x2, y2; // half-open

    bool contains(double px, double py) const {
        return px >= x1 && px < x2 && py >= y1 && py < y2;
    }
    bool contains_box(const PixelBox& o) const {
        return o.x1 >= x1 && o.y1 >= y1 && o.x2 <= x2 && o.y2 <= y2;
    }
    bool intersects(const PixelBox& o) const {
        return o.x1 < x2 && o.x2 > x1 && o.y1 < y2 && o.y2 > y1;
    }
};

} // namespace

int SynthSequence::object_x(int object, int frame) const {
    const SynthObject& o = config.objects[object];
    return o.start_x + o.velocity_x * frame;
}

int SynthSequence::object_y(int object, int frame) const {
    const SynthObject& o = config.objects[object];
    return o.start_y + o.velocity_y * frame;
}

bool SynthSequence::inside_object(int object, int frame, double px, double py) const {
    const SynthObject& o = config.objects[object];
    const double x = object_x(object, frame);
    const double y = object_y(object, frame);
    return px >= x && px < x + o.width && py >= y && py < y + o.height;
}

std::vector<GroundTruth> SynthSequence::boxes(int frame) const {
    std::vector<GroundTruth> out;
    for (std::size_t i = 0; i < config.objects.size(); ++i) {
        const SynthObject& o = config.objects[i];
        const float x = static_cast<float>(object_x(static_cast<int>(i), frame));
        const float y = static_cast<float>(object_y(static_cast<int>(i), frame));
        out.push_back({{x / config.image_width, y / config.image_height,
                        (x + o.width) / config.image_width,
                        (y + o.height) / config.image_height},
                       o.class_id});
    }
    return out;
}

FlowField SynthSequence::gt_flow(int current, int key, const LevelDims& dims,
                                 const LevelGeometry& geom) const {
    FlowField flow(dims.height, dims.width, 0.0f);
    const int dt = key - current;
    for (int r = 0; r < dims.height; ++r) {
        for (int c = 0; c < dims.width; ++c) {
            const double py = geom.center_y() + r * geom.pixel_stride_y;
            const double px = geom.center_x() + c * geom.pixel_stride_x;
            // Later objects draw on top; they own shared pixels.
            for (int o = static_cast<int>(config.objects.size()) - 1; o >= 0; --o) {
                if (inside_object(o, current, px, py)) {
                    flow.dx(r, c) = static_cast<float>(config.objects[o].velocity_x * dt) /
                                    static_cast<float>(geom.pixel_stride_x);
                    flow.dy(r, c) = static_cast<float>(config.objects[o].velocity_y * dt) /
                                    static_cast<float>(geom.pixel_stride_y);
                    break;
                }
            }
        }
    }
    return flow;
}

std::vector<std::uint8_t> SynthSequence::consistent_mask(int current, int key,
                                                         const LevelDims& dims,
                                                         const LevelGeometry& geom) const {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(dims.height) * dims.width, 0);
    const int n = static_cast<int>(config.objects.size());

    const auto object_box = [&](int o, int frame) -> PixelBox {
        const SynthObject& obj = config.objects[o];
        const double x = object_x(o, frame);
        const double y = object_y(o, frame);
        return {x, y, x + obj.width, y + obj.height};
    };

    for (int r = 0; r < dims.height; ++r) {
        for (int c = 0; c < dims.width; ++c) {
            const double wy = static_cast<double>(r) * geom.pixel_stride_y;
            const double wx = static_cast<double>(c) * geom.pixel_stride_x;
            const PixelBox window{wx, wy, wx + geom.receptive_w, wy + geom.receptive_h};

            // Object-interior: window sits inside one object now, its warped
            // twin sits inside the same object at the key frame, and no later
            // object occludes either.
            bool consistent = false;
            for (int o = 0; o < n && !consistent; ++o) {
                if (!object_box(o, current).contains_box(window)) continue;
                const double sx = (object_x(o, key) - object_x(o, current));
                const double sy = (object_y(o, key) - object_y(o, current));
                const PixelBox shifted{window.x1 + sx, window.y1 + sy, window.x2 + sx,
                                       window.y2 + sy};
                bool occluded = false;
                for (int p = o + 1; p < n; ++p) {
                    if (object_box(p, current).intersects(window) ||
                        object_box(p, key).intersects(shifted)) {
                        occluded = true;
                        break;
                    }
                }
                consistent = !occluded;
            }

            // Stable background: no object touches the window in either frame.
            if (!consistent) {
                bool touched = false;
                for (int o = 0; o < n && !touched; ++o)
                    touched = object_box(o, current).intersects(window) ||
                              object_box(o, key).intersects(window);
                consistent = !touched;
            }

            mask[static_cast<std::size_t>(r) * dims.width + c] = consistent ? 1 : 0;
        }
    }
    return mask;
}

SynthSequence generate_sequence(const SynthConfig& config, std::uint64_t seed) {
    if (config.image_height <= 0 || config.image_width <= 0 || config.frame_count <= 0)
        throw ConfigError("generate_sequence: dims and frame count must be positive");

    SynthSequence seq;
    seq.config = config;

    for (std::size_t i = 0; i < config.objects.size(); ++i) {
        const SynthObject& o = config.objects[i];
        if (o.width <= 0 || o.height <= 0) throw ConfigError("object size must be positive");
        for (int t = 0; t < config.frame_count; ++t) {
            const int x = o.start_x + o.velocity_x * t;
            const int y = o.start_y + o.velocity_y * t;
            if (x < 0 || y < 0 || x + o.width > config.image_width ||
                y + o.height > config.image_height)
                throw ConfigError("object " + std::to_string(i) + " leaves the frame at frame " +
                                  std::to_string(t));
        }
    }

    // Static background pattern shared by all frames.
    Image background(config.image_height, config.image_width, 0.5f);
    if (config.background_texture_amplitude > 0.0f) {
        Rng rng = Rng::fork(seed, kBackgroundStream);
        for (float& v : background.data) {
            v = std::clamp(0.5f + config.background_texture_amplitude *
                                      (rng.uniform_float() * 2.0f - 1.0f),
                           0.0f, 1.0f);
        }
    }

    // Per-object rigid textures.
    std::vector<std::vector<float>> textures;
    for (const SynthObject& o : config.objects) {
        Rng rng(o.texture_seed);
        std::vector<float> tex(static_cast<std::size_t>(o.height) * o.width * 3);
        for (float& v : tex) v = rng.uniform_float(0.05f, 0.95f);
        textures.push_back(std::move(tex));
    }

    for (int t = 0; t < config.frame_count; ++t) {
        Image frame = background;
        if (config.noise_amplitude > 0.0f) {
            Rng rng = Rng::fork(seed, kNoiseStreamBase + static_cast<std::uint64_t>(t));
            for (float& v : frame.data) {
                v = std::clamp(
                    v + config.noise_amplitude * (rng.uniform_float() * 2.0f - 1.0f), 0.0f, 1.0f);
            }
        }
        // Objects draw over background and noise, in index order.
        for (std::size_t i = 0; i < config.objects.size(); ++i) {
            const SynthObject& o = config.objects[i];
            const int ox = o.start_x + o.velocity_x * t;
            const int oy = o.start_y + o.velocity_y * t;
            for (int y = 0; y < o.height; ++y) {
                for (int x = 0; x < o.width; ++x) {
                    const float* src = textures[i].data() + (static_cast<std::size_t>(y) * o.width + x) * 3;
                    float* dst = &frame.at(oy + y, ox + x, 0);
                    dst[0] = src[0];
                    dst[1] = src[1];
                    dst[2] = src[2];
                }
            }
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

void export_sequence(const SynthSequence& sequence, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    char name[32];
    for (std::size_t t = 0; t < sequence.frames.size(); ++t) {
        std::snprintf(name, sizeof(name), "frame_%05zu.ppm", t);
        write_ppm(sequence.frames[t], dir / name);
    }

    std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
    if (!manifest) throw FormatError("cannot write manifest", 0);
    manifest << "# frame then per object: x1 y1 x2 y2 vx vy (boxes normalized, velocity px/frame)\n";
    char field[64];
    for (std::size_t t = 0; t < sequence.frames.size(); ++t) {
        manifest << t;
        const auto boxes = sequence.boxes(static_cast<int>(t));
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            const Box& b = boxes[i].box;
            const SynthObject& o = sequence.config.objects[i];
            std::snprintf(field, sizeof(field), " %.6f %.6f %.6f %.6f %d %d", b.x1, b.y1, b.x2,
                          b.y2, o.velocity_x, o.velocity_y);
            manifest << field;
        }
        manifest << "\n";
    }
}

FlowEstimate SynthFlowEstimator::estimate(const Image&, const Image&, int key_index,
                                          int current_index) const {
    FlowEstimate est;
    est.flow = sequence_->gt_flow(current_index, key_index, dims_, geom_);
    est.scale = ScaleMap(dims_.height, dims_.width, 1, 1.0f);
    return est;
}

std::vector<double> approximation_error(const SynthSequence& sequence,
                                        const PipelineConfig& config,
                                        std::span<const int> k_values, ErrorMask mask,
                                        std::shared_ptr<const FlowEstimator> flow) {
    auto extractor = std::make_shared<ToyExtractor>(config.extractor);
    std::vector<double> errors;

    for (int k : k_values) {
        if (k < 1) throw ContractError("approximation_error: k values must be >= 1");
        if (k == 1) {
            errors.push_back(0.0); // every frame is a key frame
            continue;
        }

        PipelineConfig run_config = config;
        run_config.key_interval = k;
        run_config.enable_fa = true;
        Pipeline pipeline(run_config, extractor, flow);

        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t t = 0; t < sequence.frames.size(); ++t) {
            const FrameOutcome outcome = pipeline.step(sequence.frames[t]);
            if (outcome.role != FrameRole::non_key) continue;

            const FeaturePyramid direct = extractor->extract(sequence.frames[t]);
            const FeaturePyramid& approx = pipeline.current_features();
            const auto& valid = pipeline.last_valid_masks();
            const int key_index = pipeline.memory().key_index;

            for (std::size_t l = 0; l < direct.level_count(); ++l) {
                const FeatureMap& a = approx.levels[l];
                const FeatureMap& d = direct.levels[l];
                const int margin = extractor->interior_margin(l);
                std::vector<std::uint8_t> extra;
                if (mask == ErrorMask::content_consistent)
                    extra = sequence.consistent_mask(static_cast<int>(t), key_index,
                                                     extractor->level_dims()[l],
                                                     extractor->geometry()[l]);

                for (int y = margin; y < d.height - margin; ++y) {
                    for (int x = margin; x < d.width - margin; ++x) {
                        const std::size_t cell = static_cast<std::size_t>(y) * d.width + x;
                        if (!valid[l][cell]) continue;
                        if (!extra.empty() && !extra[cell]) continue;
                        const float* pa = a.cell(y, x);
                        const float* pd = d.cell(y, x);
                        for (int c = 0; c < d.channels; ++c) {
                            total += std::abs(static_cast<double>(pa[c]) - pd[c]);
                            ++count;
                        }
                    }
                }
            }
        }
        errors.push_back(count == 0 ? 0.0 : total / static_cast<double>(count));
    }
    return errors;
}

} // namespace flowprop
