// lownoise: diagnostics for score-based diffusion models in the low-noise
// regime. Subcommands cover the pipeline stages; every run is deterministic
// given the config's master_seed.

#include <cstdint>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "lownoise/kernels.hpp"
#include "lownoise/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Experiment config (JSON)")->required();
    cmd->add_option("--out", args.out_override, "Override the config's out_dir");
    cmd->add_option("--seed", args.seed_override, "Override the config's master_seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--threads", args.threads, "Worker threads (default: hardware)");
}

lownoise::Pipeline make_pipeline(const CommonArgs& args) {
    lownoise::ExperimentConfig cfg = lownoise::parse_config(args.config_path);
    if (!args.out_override.empty()) cfg.out_dir = args.out_override;
    if (args.seed_set) cfg.master_seed = args.seed_override;
    int threads = args.threads > 0
                      ? args.threads
                      : static_cast<int>(std::min(8u, std::max(1u, std::thread::hardware_concurrency())));
    lownoise::kernels::set_threads(threads);
    return lownoise::Pipeline(std::move(cfg));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-noise diffusion model diagnostics"};
    app.require_subcommand(1);

    CommonArgs args;
    auto* gen = app.add_subcommand("gen-data", "Generate catalog datasets");
    auto* train = app.add_subcommand("train", "Train models (cached as checkpoints)");
    auto* probe = app.add_subcommand("probe", "Run configured probes against checkpoints");
    auto* report = app.add_subcommand("report", "Write the content-hash manifest");
    auto* plot = app.add_subcommand("plot", "Render SVG plots from probe CSVs");
    auto* verify = app.add_subcommand("verify", "Verify files against the manifest");
    auto* run = app.add_subcommand("run", "Full pipeline: gen-data, train, probe, plot, report");
    for (auto* cmd : {gen, train, probe, report, plot, verify, run}) add_common(cmd, args);

    CLI11_PARSE(app, argc, argv);

    try {
        lownoise::Pipeline pipeline = make_pipeline(args);
        if (gen->parsed()) pipeline.gen_data();
        if (train->parsed()) pipeline.train_models();
        if (probe->parsed()) pipeline.run_probes();
        if (plot->parsed()) pipeline.make_plots();
        if (report->parsed()) pipeline.write_report();
        if (verify->parsed()) pipeline.verify();
        if (run->parsed()) pipeline.run_all();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
