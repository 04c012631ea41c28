#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "flowprop/bench.hpp"
#include "flowprop/errors.hpp"
#include "flowprop/synth.hpp"
#include "flowprop/verify.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    bool parallel = false;
    std::int64_t seed = -1;
    int key_interval = -1;
    bool no_fa = false;
    bool no_ma = false;
    bool no_scale_map = false;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "key = value settings file");
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--key-interval", flags.key_interval, "frames between key frames");
    cmd->add_flag("--no-fa", flags.no_fa, "disable feature approximation");
    cmd->add_flag("--no-ma", flags.no_ma, "disable memory aggregation");
    cmd->add_flag("--no-scale-map", flags.no_scale_map, "disable scale-map refinement");
    cmd->add_option("--out", flags.out_dir, "output directory");
}

flowprop::RunSettings resolve(const CommonFlags& flags) {
    flowprop::RunSettings settings;
    if (!flags.config_path.empty()) settings = flowprop::load_settings(flags.config_path);
    if (flags.seed >= 0) settings.seed = static_cast<std::uint64_t>(flags.seed);
    if (flags.key_interval > 0) settings.key_interval = flags.key_interval;
    if (flags.no_fa) settings.fa = false;
    if (flags.no_ma) settings.ma = false;
    if (flags.no_scale_map) settings.scale_maps = false;
    if (!flags.out_dir.empty()) settings.out_dir = flags.out_dir;
    if (flags.parallel) settings.parallel = true;
    return settings;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flow-guided sparse key-frame inference harness"};
    app.require_subcommand(1);

    CommonFlags run_flags, bench_flags, sweep_flags, synth_flags, verify_flags;

    CLI::App* run_cmd =
        app.add_subcommand("run", "pipeline over a synthetic sequence, emits detections CSV");
    add_common(run_cmd, run_flags);
    CLI::App* bench_cmd = app.add_subcommand("bench", "throughput benchmark, emits report CSV");
    add_common(bench_cmd, bench_flags);
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "error-vs-k and fps-vs-k robustness curves");
    add_common(sweep_cmd, sweep_flags);
    sweep_cmd->add_flag("--parallel", sweep_flags.parallel,
                        "measure the fps sweep's intervals on parallel threads");
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "generate and export a synthetic sequence");
    add_common(synth_cmd, synth_flags);
    CLI::App* verify_cmd = app.add_subcommand("verify", "run the oracle self-check suites");
    add_common(verify_cmd, verify_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            flowprop::run_pipeline_command(resolve(run_flags), std::cout);
        } else if (bench_cmd->parsed()) {
            const flowprop::RunSettings settings = resolve(bench_flags);
            const flowprop::BenchReport report = flowprop::run_benchmark(settings);
            std::filesystem::create_directories(settings.out_dir);
            flowprop::write_report_csv(report, settings.out_dir / "bench_report.csv");
            flowprop::print_report(report, std::cout);
        } else if (sweep_cmd->parsed()) {
            flowprop::run_sweep(resolve(sweep_flags), std::cout);
        } else if (synth_cmd->parsed()) {
            const flowprop::RunSettings settings = resolve(synth_flags);
            const flowprop::SynthConfig config = flowprop::make_synth_config(settings);
            const flowprop::SynthSequence sequence =
                flowprop::generate_sequence(config, settings.seed);
            flowprop::export_sequence(sequence, settings.out_dir);
            std::cout << "exported " << sequence.frames.size() << " frames to "
                      << settings.out_dir.string() << "\n";
        } else if (verify_cmd->parsed()) {
            const flowprop::RunSettings settings = resolve(verify_flags);
            const int failures = flowprop::run_verification(std::cout, settings.seed);
            if (failures > 0) {
                std::cerr << failures << " suite(s) failed\n";
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
