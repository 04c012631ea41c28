#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "flowprop/bench.hpp"
#include "flowprop/errors.hpp"
#include "support.hpp"

using namespace flowprop;

TEST_CASE("predicted frame time") {
    CostModel m;
    m.c_feat_ns = 100;
    m.c_det_ns = 10;
    m.c_flow_ns = 5;
    m.c_warp_ns = 1;

    SUBCASE("k = 1 without aggregation collapses to the baseline") {
        CHECK(predicted_frame_time_ns(m, 1, true, false) ==
              doctest::Approx(predicted_frame_time_ns(m, 1, false, false)));
    }
    SUBCASE("worked example: (110 + 9*16)/10") {
        CHECK(predicted_frame_time_ns(m, 10, false, false) == doctest::Approx(110.0));
        CHECK(predicted_frame_time_ns(m, 10, true, false) == doctest::Approx(25.4));
        // predicted speedup about 4.33x
        CHECK(predicted_frame_time_ns(m, 10, false, false) /
                  predicted_frame_time_ns(m, 10, true, false) ==
              doctest::Approx(110.0 / 25.4));
    }
    SUBCASE("large k saturates at the non-key cost") {
        const double t_nonkey = m.c_flow_ns + m.c_warp_ns + m.c_det_ns;
        CHECK(predicted_frame_time_ns(m, 1000000, true, false) ==
              doctest::Approx(t_nonkey).epsilon(1e-3));
    }
    SUBCASE("amortized time falls monotonically toward saturation") {
        double prev = predicted_frame_time_ns(m, 1, true, false);
        for (int k : {2, 4, 6, 8, 10}) {
            const double t = predicted_frame_time_ns(m, k, true, false);
            CHECK(t < prev);
            prev = t;
        }
    }
    SUBCASE("aggregation adds its key-frame terms") {
        m.c_embed_ns = 7;
        m.c_agg_ns = 3;
        const double t_key = 100 + 10 + 5 + 2 * 7 + 3;
        const double t_nonkey = 5 + 1 + 10;
        CHECK(predicted_frame_time_ns(m, 4, true, true) ==
              doctest::Approx((t_key + 3 * t_nonkey) / 4));
    }
    SUBCASE("invalid k throws") { CHECK_THROWS_AS(predicted_frame_time_ns(m, 0, true, false), ContractError); }
}

TEST_CASE("settings file parsing") {
    testutil::TempDir dir("settings");
    const auto path = dir.path() / "config.txt";

    SUBCASE("valid file") {
        std::ofstream f(path);
        f << "# comment\n"
             "seed = 5\n"
             "image_height = 64\n"
             "image_width = 64\n"
             "levels = 32x32x6,16x16x8\n"
             "key_interval = 4\n"
             "ma = off\n"
             "error_k_values = 1,2,4\n"
             "frames = 10\n";
        f.close();
        const RunSettings s = load_settings(path);
        CHECK(s.seed == 5);
        CHECK(s.image_height == 64);
        CHECK(s.levels.size() == 2);
        CHECK(s.levels[1].channels == 8);
        CHECK(s.key_interval == 4);
        CHECK_FALSE(s.ma);
        CHECK(s.error_k_values == std::vector<int>{1, 2, 4});
    }

    SUBCASE("unknown key reports the line number") {
        std::ofstream f(path);
        f << "seed = 1\nbogus = 2\n";
        f.close();
        try {
            load_settings(path);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line() == 2);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }

    SUBCASE("bad value reports the line number") {
        std::ofstream f(path);
        f << "\n\nframes = many\n";
        f.close();
        try {
            load_settings(path);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line() == 3);
        }
    }

    SUBCASE("missing file") { CHECK_THROWS_AS(load_settings(dir.path() / "nope.txt"), ConfigError); }
}

namespace {

// Desk-scale settings so benchmark-path tests stay fast.
RunSettings tiny_settings(const std::filesystem::path& out) {
    RunSettings s;
    s.seed = 3;
    s.image_height = 64;
    s.image_width = 64;
    s.levels = {{32, 32, 8}, {16, 16, 12}};
    s.key_interval = 4;
    s.frames = 9;
    s.object_count = 1;
    s.object_size = 20;
    s.velocity_x = 2;
    s.repeats = 1;
    s.head.class_count = 3;
    s.head.anchors_per_cell = 2;
    s.out_dir = out;
    return s;
}

} // namespace

TEST_CASE("benchmark report structure and accounting") {
    testutil::TempDir dir("bench");
    const RunSettings s = tiny_settings(dir.path());
    const BenchReport report = run_benchmark(s);

    REQUIRE(report.rows.size() == 3); // baseline, fa, fa+ma
    CHECK(report.rows[0].label == "baseline");
    CHECK(report.rows[0].extractor_calls == 9);
    CHECK(report.rows[1].label == "fa");
    CHECK(report.rows[1].extractor_calls == 3); // ceil(9/4)
    CHECK(report.rows[2].label == "fa+ma");
    CHECK(report.rows[2].extractor_calls == 3);
    for (const BenchRow& r : report.rows) {
        CHECK(r.measured_fps > 0);
        CHECK(r.predicted_fps > 0);
        CHECK(r.pipeline_fps >= r.measured_fps); // loading only slows things down
    }

    write_report_csv(report, dir.path() / "report.csv");
    std::ifstream f(dir.path() / "report.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header.find("measured_fps") != std::string::npos);
    int rows = 0;
    std::string line;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("run command emits deterministic csv output") {
    testutil::TempDir dir_a("run_a"), dir_b("run_b");
    RunSettings a = tiny_settings(dir_a.path());
    RunSettings b = tiny_settings(dir_b.path());

    std::ostringstream sink;
    run_pipeline_command(a, sink);
    run_pipeline_command(b, sink);

    const auto slurp = [](const std::filesystem::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    };
    CHECK(slurp(dir_a.path() / "detections.csv") == slurp(dir_b.path() / "detections.csv"));

    // summaries agree on the non-timing columns
    std::ifstream fa(dir_a.path() / "run_summary.csv"), fb(dir_b.path() / "run_summary.csv");
    std::string la, lb;
    while (std::getline(fa, la) && std::getline(fb, lb)) {
        const auto prefix = [](const std::string& s) {
            std::size_t pos = 0;
            for (int i = 0; i < 3 && pos != std::string::npos; ++i)
                pos = s.find(',', pos + 1);
            return s.substr(0, pos);
        };
        CHECK(prefix(la) == prefix(lb));
    }
}

TEST_CASE("sweep emits error and fps curves") {
    testutil::TempDir dir("sweep");
    RunSettings s = tiny_settings(dir.path());
    s.error_k_values = {1, 2, 4};
    s.fps_k_values = {2, 4};
    s.ma = false;

    std::ostringstream sink;
    run_sweep(s, sink);

    std::ifstream err_csv(dir.path() / "error_vs_k.csv");
    std::string line;
    std::getline(err_csv, line);
    CHECK(line == "key_interval,mean_error");
    std::getline(err_csv, line);
    CHECK(line.substr(0, 2) == "1,");
    CHECK(line.find("0.000000") != std::string::npos); // k = 1 approximates nothing

    std::ifstream fps_csv(dir.path() / "fps_vs_k.csv");
    std::getline(fps_csv, line);
    CHECK(line == "key_interval,measured_fps,pipeline_fps,predicted_fps");
    int rows = 0;
    while (std::getline(fps_csv, line)) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("throughput rises with the key interval when extraction dominates") {
    // default extraction-heavy configuration; endpoints are far enough apart
    // that wall-clock noise cannot flip them
    testutil::TempDir dir("fps_trend");
    RunSettings s;
    s.seed = 21;
    s.frames = 12;
    s.repeats = 3;
    s.ma = false;
    s.error_k_values = {1};
    s.fps_k_values = {2, 10};
    s.out_dir = dir.path();

    std::ostringstream sink;
    run_sweep(s, sink);

    std::ifstream fps_csv(dir.path() / "fps_vs_k.csv");
    std::string line;
    std::getline(fps_csv, line); // header
    std::vector<double> pipeline_fps;
    while (std::getline(fps_csv, line)) {
        // third column
        std::size_t a = line.find(',');
        a = line.find(',', a + 1);
        const std::size_t b = line.find(',', a + 1);
        pipeline_fps.push_back(std::stod(line.substr(a + 1, b - a - 1)));
    }
    REQUIRE(pipeline_fps.size() == 2);
    CHECK(pipeline_fps[1] > pipeline_fps[0]);
}

TEST_CASE("parallel sweep produces the same files") {
    testutil::TempDir dir("sweep_par");
    RunSettings s = tiny_settings(dir.path());
    s.error_k_values = {1, 2};
    s.fps_k_values = {2, 4};
    s.ma = false;
    s.parallel = true;
    std::ostringstream sink;
    run_sweep(s, sink);
    CHECK(std::filesystem::exists(dir.path() / "error_vs_k.csv"));
    CHECK(std::filesystem::exists(dir.path() / "fps_vs_k.csv"));
}

TEST_CASE("bench report non-timing columns are reproducible") {
    testutil::TempDir dir_a("bench_rep_a"), dir_b("bench_rep_b");
    const BenchReport a = run_benchmark(tiny_settings(dir_a.path()));
    const BenchReport b = run_benchmark(tiny_settings(dir_b.path()));
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].label == b.rows[i].label);
        CHECK(a.rows[i].key_interval == b.rows[i].key_interval);
        CHECK(a.rows[i].frames == b.rows[i].frames);
        CHECK(a.rows[i].extractor_calls == b.rows[i].extractor_calls);
        CHECK(a.rows[i].mean_error == b.rows[i].mean_error);
    }
}

TEST_CASE("synth config placement rejects impossible travel") {
    RunSettings s = tiny_settings("unused");
    s.velocity_x = 20;
    CHECK_THROWS_AS(make_synth_config(s), ConfigError);
}
