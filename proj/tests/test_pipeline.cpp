#include <doctest.h>

#include <map>

#include "flowprop/errors.hpp"
#include "flowprop/pipeline.hpp"
#include "flowprop/synth.hpp"
#include "support.hpp"

using namespace flowprop;

namespace {

// Small fast config shared by the pipeline tests.
PipelineConfig small_config(std::uint64_t seed = 9) {
    PipelineConfig config;
    config.extractor.seed = seed;
    config.extractor.input_height = 48;
    config.extractor.input_width = 48;
    config.extractor.levels = {{24, 24, 6}, {12, 12, 8}};
    config.block_match = {1, 4, 1e-5f};
    config.head.class_count = 3;
    config.head.anchors_per_cell = 2;
    config.embedding.seed = seed + 1;
    config.head.seed = seed + 2;
    return config;
}

SynthSequence static_sequence(int frames, std::uint64_t seed = 5) {
    SynthConfig sc;
    sc.image_height = 48;
    sc.image_width = 48;
    sc.frame_count = frames;
    sc.background_texture_amplitude = 0.3f;
    SynthObject obj;
    obj.width = 16;
    obj.height = 16;
    obj.start_x = 8;
    obj.start_y = 8;
    obj.texture_seed = seed;
    sc.objects.push_back(obj);
    return generate_sequence(sc, seed);
}

bool same_detections(const std::vector<Detection>& a, const std::vector<Detection>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].class_id != b[i].class_id || a[i].score != b[i].score ||
            a[i].box.x1 != b[i].box.x1 || a[i].box.y2 != b[i].box.y2)
            return false;
    return true;
}

} // namespace

TEST_CASE("config validation") {
    CHECK(PipelineConfig{}.key_interval == 10); // reference operating point
    PipelineConfig config = small_config();
    config.key_interval = 0;
    CHECK_THROWS_AS(Pipeline{config}, ConfigError);
    config.key_interval = 10;
    config.enable_fa = false;
    config.enable_ma = true;
    CHECK_THROWS_AS(Pipeline{config}, ConfigError);
}

TEST_CASE("role sequence over 22 frames with k = 10") {
    PipelineConfig config = small_config();
    config.key_interval = 10;
    config.enable_ma = false;
    Pipeline pipeline(config);
    const SynthSequence seq = static_sequence(22);

    std::vector<FrameRole> roles;
    for (const Image& frame : seq.frames) roles.push_back(pipeline.step(frame).role);

    CHECK(roles[0] == FrameRole::initial);
    for (int i = 1; i < 22; ++i) {
        if (i % 10 == 0)
            CHECK(roles[i] == FrameRole::key);
        else
            CHECK(roles[i] == FrameRole::non_key);
    }
}

TEST_CASE("k = 1 makes every frame after the first a key frame") {
    PipelineConfig config = small_config();
    config.key_interval = 1;
    config.enable_ma = false;
    Pipeline pipeline(config);
    const SynthSequence seq = static_sequence(4);
    CHECK(pipeline.step(seq.frames[0]).role == FrameRole::initial);
    for (int i = 1; i < 4; ++i) CHECK(pipeline.step(seq.frames[i]).role == FrameRole::key);
}

TEST_CASE("extractor call accounting") {
    const SynthSequence seq = static_sequence(21);

    SUBCASE("with approximation: ceil(N/k) calls") {
        PipelineConfig config = small_config();
        config.key_interval = 5;
        config.enable_ma = false;
        Pipeline pipeline(config);
        for (const Image& frame : seq.frames) pipeline.step(frame);
        CHECK(pipeline.counters().extractor_calls == 5); // frames 0,5,10,15,20
    }
    SUBCASE("without approximation: every frame") {
        PipelineConfig config = small_config();
        config.enable_fa = false;
        config.enable_ma = false;
        Pipeline pipeline(config);
        for (const Image& frame : seq.frames) pipeline.step(frame);
        CHECK(pipeline.counters().extractor_calls == 21);
    }
}

TEST_CASE("static video detections are identical under every configuration") {
    const SynthSequence seq = static_sequence(12);

    PipelineConfig config = small_config();
    config.key_interval = 4;

    for (const char* mode : {"baseline", "fa", "fa+ma"}) {
        CAPTURE(mode);
        config.enable_fa = mode != std::string("baseline");
        config.enable_ma = mode == std::string("fa+ma");
        Pipeline pipeline(config);

        std::vector<Detection> first;
        for (int i = 0; i < 12; ++i) {
            const FrameOutcome out = pipeline.step(seq.frames[i]);
            if (i == 0)
                first = out.detections;
            else
                CHECK(same_detections(out.detections, first)); // zero flow, identity warp
        }
    }
}

TEST_CASE("static video with aggregation leaves key features unchanged") {
    const SynthSequence seq = static_sequence(9);

    PipelineConfig config = small_config();
    config.key_interval = 4;
    config.enable_ma = true;
    Pipeline pipeline(config);

    FeaturePyramid initial;
    for (int i = 0; i < 9; ++i) {
        pipeline.step(seq.frames[i]);
        if (i == 0) initial = pipeline.current_features();
    }
    // after two aggregating key frames the memory still equals the initial features
    const FeaturePyramid& memory = pipeline.memory().pyramid;
    REQUIRE(memory.level_count() == initial.level_count());
    for (std::size_t l = 0; l < memory.level_count(); ++l)
        CHECK(memory.levels[l].data == initial.levels[l].data);
}

namespace {

// Zero motion with a uniform x2 scale map: isolates the refinement path.
class DoublingFlow final : public FlowEstimator {
public:
    FlowEstimate estimate(const Image&, const Image&, int, int) const override {
        FlowEstimate est;
        est.flow = FlowField(24, 24, 0.0f);
        est.scale = ScaleMap(24, 24, 1, 2.0f);
        return est;
    }
};

} // namespace

TEST_CASE("externally supplied scale maps refine approximated features") {
    const SynthSequence seq = static_sequence(3);
    PipelineConfig config = small_config();
    config.key_interval = 4;
    config.enable_ma = false;

    for (const bool scale_on : {true, false}) {
        CAPTURE(scale_on);
        config.enable_scale_maps = scale_on;
        Pipeline pipeline(config, std::make_shared<ToyExtractor>(config.extractor),
                          std::make_shared<DoublingFlow>());
        pipeline.step(seq.frames[0]);
        const FeaturePyramid memory = pipeline.memory().pyramid;
        pipeline.step(seq.frames[1]); // non-key: zero flow, scale 2 everywhere
        const FeaturePyramid& approx = pipeline.current_features();
        for (std::size_t l = 0; l < memory.level_count(); ++l)
            for (std::size_t i = 0; i < memory.levels[l].data.size(); ++i) {
                const float expect = scale_on ? 2.0f * memory.levels[l].data[i]
                                              : memory.levels[l].data[i];
                CHECK(approx.levels[l].data[i] == expect);
            }
    }
}

TEST_CASE("at k = 1 without aggregation the pipeline equals the baseline") {
    const SynthSequence seq = static_sequence(6);

    PipelineConfig fa = small_config();
    fa.key_interval = 1;
    fa.enable_ma = false;
    PipelineConfig baseline = fa;
    baseline.enable_fa = false;

    Pipeline p1(fa), p2(baseline);
    for (const Image& frame : seq.frames)
        CHECK(same_detections(p1.step(frame).detections, p2.step(frame).detections));
}

TEST_CASE("frame dim mismatch is a contract error") {
    Pipeline pipeline(small_config());
    CHECK_THROWS_AS(pipeline.step(Image(16, 16, 0.5f)), ContractError);
}

TEST_CASE("triplet sampling") {
    SUBCASE("paper offsets: i=25, r=10 gives (5, 15, 25)") {
        const TrainingTriplet t = make_triplet(25, 10, 10);
        CHECK(t.mem == 5);
        CHECK(t.key == 15);
        CHECK(t.target == 25);
    }
    SUBCASE("zero offset puts the key on the target") {
        const TrainingTriplet t = make_triplet(25, 0, 10);
        CHECK(t.key == 25);
        CHECK(t.mem == 15);
    }
    SUBCASE("clamping near the clip start") {
        const TrainingTriplet t = make_triplet(12, 10, 10);
        CHECK(t.key == 10); // clamped so mem stays at 0
        CHECK(t.mem == 0);
    }
    SUBCASE("sampled triplets are always ordered and in range") {
        Rng rng(77);
        for (int trial = 0; trial < 2000; ++trial) {
            const int length = rng.uniform_int(11, 60);
            const TrainingTriplet t = select_training_triplet(length, 10, 10, rng);
            CHECK(t.mem >= 0);
            CHECK(t.mem < t.key);
            CHECK(t.key <= t.target);
            CHECK(t.target < length);
        }
    }
    SUBCASE("short clips are rejected") {
        Rng rng(1);
        CHECK_THROWS_AS(select_training_triplet(10, 10, 10, rng), SamplingError);
        CHECK_NOTHROW(select_training_triplet(11, 10, 10, rng));
    }
}

TEST_CASE("clip frame sampling") {
    SUBCASE("evenly spread over a 150-frame clip") {
        // frozen from round(j*(L-1)/(n-1)); see the sampling formula
        const std::vector<int> expect = {0,  11, 21, 32,  43,  53,  64, 75,
                                         85, 96, 106, 117, 128, 138, 149};
        CHECK(sample_clip_frames(150, 15) == expect);
    }
    SUBCASE("clip length equals sample count") {
        const std::vector<int> got = sample_clip_frames(15, 15);
        REQUIRE(got.size() == 15);
        for (int i = 0; i < 15; ++i) CHECK(got[i] == i);
    }
    SUBCASE("short clip collapses to all frames after dedup") {
        CHECK(sample_clip_frames(5, 15) == std::vector<int>{0, 1, 2, 3, 4});
    }
    SUBCASE("n = 1 samples the first frame") { CHECK(sample_clip_frames(40, 1) == std::vector<int>{0}); }
}

TEST_CASE("triplet offset distribution is uniform on long clips") {
    Rng rng(123);
    std::map<int, int> histogram;
    const int samples = 20000;
    for (int i = 0; i < samples; ++i) {
        const TrainingTriplet t = select_training_triplet(40, 10, 10, rng);
        ++histogram[t.target - t.key];
    }
    REQUIRE(histogram.size() == 11);
    // chi-square against uniform over [0, 10], 10 dof
    double stat = 0.0;
    const double expected = samples / 11.0;
    for (const auto& [offset, count] : histogram) {
        const double d = count - expected;
        stat += d * d / expected;
    }
    CHECK(stat < 23.2093); // 99th percentile of chi-square(10)
}
