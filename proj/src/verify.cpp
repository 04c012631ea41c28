#include "flowprop/verify.hpp"

#include <cmath>
#include <ostream>

#include "flowprop/aggregate.hpp"
#include "flowprop/oracle.hpp"
#include "flowprop/rng.hpp"
#include "flowprop/warp.hpp"

namespace flowprop {

namespace {

FeatureMap random_map(Rng& rng, int h, int w, int c, float lo = -1.0f, float hi = 1.0f) {
    FeatureMap m(h, w, c);
    for (float& v : m.data) v = rng.uniform_float(lo, hi);
    return m;
}

FlowField random_flow(Rng& rng, int h, int w, float radius) {
    FlowField f(h, w);
    for (float& v : f.data) v = rng.uniform_float(-radius, radius);
    return f;
}

// Flow whose sample points stay clear of integer coordinates, where the
// bilinear kernel's derivative is undefined.
FlowField random_smooth_flow(Rng& rng, int h, int w, int radius) {
    FlowField f(h, w);
    for (float& v : f.data) {
        const int whole = rng.uniform_int(-radius, radius - 1);
        v = static_cast<float>(whole) + rng.uniform_float(0.1f, 0.9f);
    }
    return f;
}

bool warp_oracle_suite(std::ostream& os, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int h = rng.uniform_int(1, 6);
        const int w = rng.uniform_int(1, 6);
        const int c = rng.uniform_int(1, 3);
        const FeatureMap f = random_map(rng, h, w, c);
        const FlowField m = random_flow(rng, h, w, 3.0f);
        const FeatureMap expect = oracle::warp_reference(f, m);
        const WarpResult got = warp_feature(f, m);
        for (std::size_t i = 0; i < expect.data.size(); ++i)
            worst = std::max(worst, std::abs(static_cast<double>(expect.data[i]) - got.warped.data[i]));
    }
    const bool ok = worst <= 1e-6;
    os << (ok ? "pass" : "FAIL") << "  warp vs all-pairs reference (1000 instances, max |err| "
       << worst << ")\n";
    return ok;
}

bool gradient_suite(std::ostream& os, std::uint64_t seed) {
    Rng rng(seed + 1);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int h = rng.uniform_int(3, 5);
        const int w = rng.uniform_int(3, 5);
        const int c = rng.uniform_int(1, 2);
        const FeatureMap f = random_map(rng, h, w, c);
        const FlowField m = random_smooth_flow(rng, h, w, 2);
        const FeatureMap g = random_map(rng, h, w, c);
        const auto [gf, gm] = warp_backward(f, m, g);
        const auto [fd_f, fd_m] = oracle::warp_gradients_fd(f, m, g, 1e-3f);
        const auto rel = [](float a, float b) {
            const double denom = std::max({std::abs(static_cast<double>(a)),
                                           std::abs(static_cast<double>(b)), 1e-4});
            return std::abs(static_cast<double>(a) - b) / denom;
        };
        for (std::size_t i = 0; i < gf.data.size(); ++i)
            worst = std::max(worst, rel(gf.data[i], fd_f.data[i]));
        for (std::size_t i = 0; i < gm.data.size(); ++i)
            worst = std::max(worst, rel(gm.data[i], fd_m.data[i]));
    }
    const bool ok = worst <= 1e-3;
    os << (ok ? "pass" : "FAIL") << "  warp backward vs central differences (100 instances, "
       << "max rel err " << worst << ")\n";
    return ok;
}

bool nms_suite(std::ostream& os, std::uint64_t seed) {
    Rng rng(seed + 2);
    bool ok = true;
    for (int trial = 0; trial < 200 && ok; ++trial) {
        std::vector<Detection> dets;
        for (int i = 0; i < 50; ++i) {
            const float x = rng.uniform_float(0.0f, 0.8f);
            const float y = rng.uniform_float(0.0f, 0.8f);
            dets.push_back({{x, y, x + rng.uniform_float(0.05f, 0.2f),
                             y + rng.uniform_float(0.05f, 0.2f)},
                            rng.uniform_int(0, 2), rng.uniform_float(0.1f, 1.0f)});
        }
        const auto fast = nms(dets, 0.5f);
        const auto slow = oracle::nms_reference(dets, 0.5f);
        ok = fast.size() == slow.size();
        for (std::size_t i = 0; ok && i < fast.size(); ++i)
            ok = fast[i].class_id == slow[i].class_id && fast[i].score == slow[i].score &&
                 fast[i].box.x1 == slow[i].box.x1 && fast[i].box.y1 == slow[i].box.y1 &&
                 fast[i].box.x2 == slow[i].box.x2 && fast[i].box.y2 == slow[i].box.y2;
    }
    os << (ok ? "pass" : "FAIL") << "  greedy NMS vs quadratic reference (200 instances)\n";
    return ok;
}

bool aggregation_suite(std::ostream& os, std::uint64_t seed) {
    Rng rng(seed + 3);
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const int h = rng.uniform_int(1, 5);
        const int w = rng.uniform_int(1, 5);
        const int c = 2 * rng.uniform_int(1, 4);
        const FeatureMap mem = random_map(rng, h, w, c, 0.0f, 1.0f);
        const FeatureMap cur = random_map(rng, h, w, c, 0.0f, 1.0f);
        EmbeddingConfig cfg{seed + 4};
        const WeightPair wp =
            similarity_weights(embed_feature(mem, cfg), embed_feature(cur, cfg));
        for (std::size_t i = 0; i < wp.w_mem.size() && ok; ++i) {
            ok = std::abs(wp.w_mem[i] + wp.w_cur[i] - 1.0f) <= 1e-6f && wp.w_mem[i] >= 0.0f &&
                 wp.w_mem[i] <= 1.0f;
        }
        const FeatureMap fused = aggregate_features(mem, cur, wp);
        for (int y = 0; y < h && ok; ++y)
            for (int x = 0; x < w && ok; ++x)
                for (int ch = 0; ch < c && ok; ++ch) {
                    const float lo = std::min(mem.at(y, x, ch), cur.at(y, x, ch));
                    const float hi = std::max(mem.at(y, x, ch), cur.at(y, x, ch));
                    ok = fused.at(y, x, ch) >= lo && fused.at(y, x, ch) <= hi;
                }
    }
    os << (ok ? "pass" : "FAIL")
       << "  aggregation weight normalization + convexity (100 instances)\n";
    return ok;
}

} // namespace

int run_verification(std::ostream& os, std::uint64_t seed) {
    int failures = 0;
    if (!warp_oracle_suite(os, seed)) ++failures;
    if (!gradient_suite(os, seed)) ++failures;
    if (!nms_suite(os, seed)) ++failures;
    if (!aggregation_suite(os, seed)) ++failures;
    return failures;
}

} // namespace flowprop
