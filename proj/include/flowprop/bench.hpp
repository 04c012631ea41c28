#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "flowprop/pipeline.hpp"
#include "flowprop/synth.hpp"

namespace flowprop {

// Amortized per-frame cost model. Per-invocation costs are fitted from
// measured stage timings (medians over a run) or injected directly.
struct CostModel {
    double c_feat_ns = 0;
    double c_flow_ns = 0;
    double c_warp_ns = 0;
    double c_embed_ns = 0; // one pyramid embedding; key frames pay it twice
    double c_agg_ns = 0;   // memory warp + weights + fusion
    double c_det_ns = 0;
};

// Baseline: c_feat + c_det. With approximation: amortize one key frame plus
// k-1 approximated frames, where a key frame adds flow + 2*embed + agg when
// aggregation is on and a non-key frame costs flow + warp + det.
double predicted_frame_time_ns(const CostModel& model, int key_interval, bool fa, bool ma);

// Runtime configuration shared by the CLI subcommands. Loadable from a
// key = value text file; every key has a default.
struct RunSettings {
    std::uint64_t seed = 1;

    // extractor / feature grid
    int image_height = 300;
    int image_width = 300;
    std::vector<LevelDims> levels; // empty = SSD300 preset with default channels

    // pipeline
    int key_interval = 10;
    bool fa = true;
    bool ma = true;
    bool scale_maps = true;
    BlockMatchConfig block_match{1, 2, 1e-4f};
    HeadConfig head;

    // synthetic sequence
    int frames = 48;
    int object_count = 2;
    int object_size = 56;
    int velocity_x = 2;
    int velocity_y = 0;
    float background_texture = 0.25f;
    float noise = 0.01f;

    // benchmark / sweeps
    int repeats = 3;
    bool parallel = false; // fps-vs-k sweep may fan out one thread per k
    std::vector<int> fps_k_values = {2, 4, 6, 8, 10};
    std::vector<int> error_k_values = {1, 2, 5, 10, 20};

    std::filesystem::path out_dir = "out";
};

// Parses `key = value` lines ('#' comments, blank lines allowed). Unknown
// keys or unparsable values raise ConfigError carrying the line number.
RunSettings load_settings(const std::filesystem::path& path);
// Applies one key/value pair (CLI overrides reuse the same table).
void apply_setting(RunSettings& settings, const std::string& key, const std::string& value,
                   int line = -1);

PipelineConfig make_pipeline_config(const RunSettings& settings);
// Deterministic object placement; throws ConfigError when travel does not fit.
SynthConfig make_synth_config(const RunSettings& settings);

struct BenchRow {
    std::string label;
    bool fa = false, ma = false, scale = false;
    int key_interval = 1;
    int frames = 0;
    double measured_fps = 0;  // wall clock including frame loading from disk
    double pipeline_fps = 0;  // pipeline step time only
    double predicted_fps = 0; // cost model at the fitted per-op medians
    double mean_error = 0;    // approximation error vs direct extraction
    std::int64_t extractor_calls = 0;
    CostModel fitted;
};

struct BenchReport {
    std::vector<BenchRow> rows;
};

// Exports the sequence to disk, then times each enabled configuration over
// the same frames (one warm-up pass, then `repeats` timed passes, median
// kept). Frame loading reads the exported pixmaps back from disk.
BenchReport run_benchmark(const RunSettings& settings);

void write_report_csv(const BenchReport& report, const std::filesystem::path& path);
void print_report(const BenchReport& report, std::ostream& os);

// Robustness sweeps: error-vs-k (block-match flow, whole-frame interior
// error) and fps-vs-k, each written as CSV.
void run_sweep(const RunSettings& settings, std::ostream& os);

// `run` subcommand core: pipeline over the synthetic sequence, emitting
// detections.csv and run_summary.csv into the output directory.
void run_pipeline_command(const RunSettings& settings, std::ostream& os);

} // namespace flowprop
