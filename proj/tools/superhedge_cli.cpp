#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "superhedge/experiment.hpp"

using namespace superhedge;

int main(int argc, char** argv) {
    CLI::App app{"Super-hedging prices and path-wise hedge simulation under uncertain execution prices"};

    std::string config_path;
    std::uint64_t seed = 0;
    std::uint64_t paths = 0;
    std::vector<double> strikes;
    RunOptions opts;
    std::string out_dir = opts.out_dir.string();
    bool dump_paths = false;
    bool histograms = false;
    bool export_strategy = false;

    app.add_option("--config", config_path, "experiment configuration (key = value lines)")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed");
    auto* paths_opt = app.add_option("--paths", paths, "number of simulated paths per strike");
    app.add_option("--strikes", strikes, "comma-separated strikes")->delimiter(',');
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--dump-paths", dump_paths, "write one CSV record per path");
    app.add_flag("--histograms", histograms, "write histogram data for S_t and eps_R");
    app.add_flag("--export-strategy", export_strategy, "write the sampled order mappings theta_t(z)");
    app.add_option("--threads", opts.threads, "worker threads (0: all cores); results do not depend on it");

    CLI11_PARSE(app, argc, argv);

    ExperimentConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            std::stringstream buf;
            buf << in.rdbuf();
            cfg = parse_config(buf.str());
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << config_path << ": " << e.what() << '\n';
        return static_cast<int>(ExitCode::Error);
    }
    if (*seed_opt) cfg.seed = seed;
    if (*paths_opt) cfg.n_paths = paths;
    if (!strikes.empty()) cfg.strikes = strikes;
    cfg.dump_paths = cfg.dump_paths || dump_paths;
    cfg.histograms = cfg.histograms || histograms;
    cfg.export_strategy = cfg.export_strategy || export_strategy;
    opts.out_dir = out_dir;

    return static_cast<int>(run_experiment(cfg, opts, std::cout));
}
