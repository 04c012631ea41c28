#include <doctest.h>

#include <thread>
#include <vector>

#include "flowprop/extractor.hpp"
#include "flowprop/flow.hpp"
#include "flowprop/warp.hpp"
#include "support.hpp"

using namespace flowprop;

// The kernels are pure: concurrent invocations on shared inputs must agree
// with serial execution exactly.

TEST_CASE("warp and flow kernels are safe to call from multiple threads") {
    Rng rng(99);
    const FeatureMap feature = testutil::random_map(rng, 12, 12, 4);
    const FlowField flow = testutil::random_flow(rng, 12, 12, 2.0f);
    const Image key = testutil::random_image(rng, 32, 32);
    const Image cur = testutil::random_image(rng, 32, 32);
    const BlockMatchConfig bm{1, 2, 1e-5f};

    const WarpResult warp_serial = warp_feature(feature, flow);
    const FlowEstimate flow_serial = estimate_flow(key, cur, bm, 16, 16);

    std::vector<int> mismatches(8, 0);
    std::vector<std::thread> workers;
    for (int t = 0; t < 8; ++t) {
        workers.emplace_back([&, t] {
            for (int i = 0; i < 20; ++i) {
                const WarpResult w = warp_feature(feature, flow);
                if (w.warped.data != warp_serial.warped.data || w.valid != warp_serial.valid)
                    ++mismatches[t];
                const FlowEstimate e = estimate_flow(key, cur, bm, 16, 16);
                if (e.flow.data != flow_serial.flow.data) ++mismatches[t];
            }
        });
    }
    for (std::thread& w : workers) w.join();
    for (int m : mismatches) CHECK(m == 0);
}

TEST_CASE("one extractor instance serves multiple threads") {
    ExtractorConfig cfg;
    cfg.seed = 5;
    cfg.input_height = 48;
    cfg.input_width = 48;
    cfg.levels = {{24, 24, 6}, {12, 12, 8}};
    const ToyExtractor extractor(cfg);

    Rng rng(7);
    const Image img = testutil::random_image(rng, 48, 48);
    const FeaturePyramid serial = extractor.extract(img);

    std::vector<int> mismatches(6, 0);
    std::vector<std::thread> workers;
    for (int t = 0; t < 6; ++t) {
        workers.emplace_back([&, t] {
            for (int i = 0; i < 10; ++i) {
                const FeaturePyramid p = extractor.extract(img);
                for (std::size_t l = 0; l < p.level_count(); ++l)
                    if (p.levels[l].data != serial.levels[l].data) ++mismatches[t];
            }
        });
    }
    for (std::thread& w : workers) w.join();
    for (int m : mismatches) CHECK(m == 0);
}
