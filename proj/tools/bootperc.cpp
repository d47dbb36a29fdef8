#include <iostream>

#include <CLI11.hpp>

#include <bootperc/run.hpp>

namespace br = bootperc::runner;

int main(int argc, char** argv) {
    CLI::App app{"Two-neighbour bootstrap percolation experiments"};
    std::string config_path, out;
    std::optional<std::int64_t> trials, stop_after;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool resume = false;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--trials", trials, "Trials per point (overrides the config)");
    app.add_option("--seed", seed, "Master seed (overrides the config)");
    app.add_option("--out", out, "Output directory (overrides the config)");
    app.add_flag("--resume", resume, "Continue an interrupted run in the output directory");
    app.add_option("--threads", threads, "Worker threads, 0 = auto (falls back to BOOTPERC_THREADS)");
    // Stops once this many units are on disk, exit code 3; for resume tests.
    app.add_option("--stop-after", stop_after)->group("");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << br::error_json("invalid_arguments", e.what()) << "\n";
        return br::exit_invalid;
    }

    br::RunConfig cfg;
    try {
        cfg = br::load_config(config_path);
    } catch (const br::ConfigError& e) {
        std::cerr << br::error_json("invalid_config", e.what()) << "\n";
        return br::exit_invalid;
    }
    if (trials) cfg.trials = *trials;
    if (seed) cfg.master_seed = *seed;
    if (!out.empty()) cfg.out = out;
    if (resume) cfg.resume = true;
    if (threads) cfg.threads = *threads;

    br::RunOptions opts;
    opts.stop_after = stop_after;
    opts.config_dir = std::filesystem::path(config_path).parent_path();
    return br::run(cfg, std::cout, std::cerr, opts);
}
