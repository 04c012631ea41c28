#include <doctest.h>

#include <cmath>

#include "flowprop/errors.hpp"
#include "flowprop/extractor.hpp"
#include "support.hpp"

using namespace flowprop;

namespace {

ExtractorConfig small_config(std::uint64_t seed = 3) {
    ExtractorConfig cfg;
    cfg.seed = seed;
    cfg.input_height = 64;
    cfg.input_width = 64;
    cfg.levels = {{32, 32, 8}, {16, 16, 12}, {8, 8, 16}};
    return cfg;
}

} // namespace

TEST_CASE("extraction is deterministic per seed") {
    Rng rng(1);
    const Image img = testutil::random_image(rng, 64, 64);
    const ExtractorConfig cfg = small_config();
    const FeaturePyramid a = toy_extract(img, cfg);
    const FeaturePyramid b = toy_extract(img, cfg);
    REQUIRE(a.level_count() == b.level_count());
    for (std::size_t l = 0; l < a.level_count(); ++l) CHECK(a.levels[l].data == b.levels[l].data);

    ExtractorConfig other = cfg;
    other.seed = 99;
    const FeaturePyramid c = toy_extract(img, other);
    CHECK(a.levels[0].data != c.levels[0].data);
}

TEST_CASE("default 300x300 config yields the five detection scales") {
    const ExtractorConfig cfg = ExtractorConfig::ssd300(1, {8, 8, 8, 8, 8});
    const ToyExtractor extractor(cfg);
    Rng rng(2);
    const Image img = testutil::random_image(rng, 300, 300);
    const FeaturePyramid pyr = extractor.extract(img);
    REQUIRE(pyr.level_count() == 5);
    const int expected[5] = {38, 19, 10, 5, 3};
    for (int l = 0; l < 5; ++l) {
        CHECK(pyr.levels[l].height == expected[l]);
        CHECK(pyr.levels[l].width == expected[l]);
    }
    CHECK_NOTHROW(pyr.validate());

    // 300 -> 38 with a valid conv lands on stride 8
    CHECK(extractor.geometry()[0].pixel_stride_x == 8);
    CHECK(extractor.geometry()[0].pixel_stride_y == 8);
}

TEST_CASE("pyramid spatial dims strictly decrease") {
    Rng rng(3);
    const Image img = testutil::random_image(rng, 64, 64);
    const FeaturePyramid pyr = toy_extract(img, small_config());
    for (std::size_t l = 1; l < pyr.level_count(); ++l) {
        CHECK(pyr.levels[l].height * pyr.levels[l].width <
              pyr.levels[l - 1].height * pyr.levels[l - 1].width);
    }
}

TEST_CASE("input size mismatch is a config error") {
    Rng rng(4);
    const Image img = testutil::random_image(rng, 32, 64);
    CHECK_THROWS_AS(toy_extract(img, small_config()), ConfigError);
}

TEST_CASE("level larger than its input is a config error") {
    ExtractorConfig cfg;
    cfg.input_height = 16;
    cfg.input_width = 16;
    cfg.levels = {{32, 32, 4}};
    CHECK_THROWS_AS(ToyExtractor{cfg}, ConfigError);
}

TEST_CASE("translating the input by one stride shifts level-0 features by one cell") {
    const ExtractorConfig cfg = small_config(11);
    const ToyExtractor extractor(cfg);
    const int stride = extractor.geometry()[0].pixel_stride_x;

    Rng rng(5);
    const Image img = testutil::random_image(rng, 64, 64);
    Image shifted(64, 64, 0.0f);
    for (int y = 0; y < 64; ++y)
        for (int x = stride; x < 64; ++x)
            for (int c = 0; c < 3; ++c) shifted.at(y, x, c) = img.at(y, x - stride, c);

    const FeatureMap f0 = extractor.extract(img).levels[0];
    const FeatureMap f1 = extractor.extract(shifted).levels[0];

    const int margin = extractor.interior_margin(0);
    REQUIRE(margin < f0.width / 2);
    for (int y = margin; y < f0.height - margin; ++y)
        for (int x = margin; x < f0.width - margin; ++x)
            for (int c = 0; c < f0.channels; ++c)
                CHECK(std::abs(f1.at(y, x, c) - f0.at(y, x - 1, c)) <= 1e-4f);
}
