// Experiment runner for the memristor/memcapacitor RSNN simulator.
//
// Subcommands:
//   run      — execute the full size x condition x seed grid from a config
//   validate — check a config file and print the resolved settings
//   export   — turn a summary.json into plot-ready CSVs
//   devices  — print sampled device populations for inspection

#include "memsnn/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace memsnn;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override,
            std::int64_t seed_offset, int jobs, bool dry_run) {
    ExperimentConfig cfg;
    try {
        cfg = validate_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
    if (!out_override.empty()) cfg.out_dir = out_override;
    for (auto& s : cfg.seeds) s += seed_offset;

    if (dry_run) {
        std::cout << config_echo(cfg) << '\n';
        std::cout << "grid: " << cfg.sizes.size() << " sizes x "
                  << cfg.conditions.size() << " conditions x "
                  << cfg.seeds.size() << " seeds = "
                  << cfg.sizes.size() * cfg.conditions.size() * cfg.seeds.size()
                  << " runs (dry run, nothing trained)\n";
        return 0;
    }

    try {
        const GridSummary summary = run_grid(cfg, jobs);
        std::cout << "condition,size,acc_mean,acc_std\n";
        for (const auto& c : summary.cells)
            std::printf("%s,%d,%.4f,%.4f\n", c.condition.c_str(), c.size,
                        c.acc_mean, c.acc_std);
        std::cout << "summary written to " << cfg.out_dir << "/summary.csv\n";
    } catch (const std::exception& e) {
        std::cerr << "run failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

int cmd_validate(const std::string& config_path) {
    try {
        const ExperimentConfig cfg = validate_config(config_path);
        std::cout << config_echo(cfg) << '\n';
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int cmd_export(const std::string& summary_path, const std::string& config_path,
               const std::string& out_dir) {
    try {
        const GridSummary summary = load_summary_json(summary_path);
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = validate_config(config_path);
        export_plot_data(summary, cfg, out_dir);
        std::cout << "plot data written to " << out_dir << '\n';
    } catch (const std::exception& e) {
        std::cerr << "export failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

int cmd_devices(int n, std::uint64_t seed) {
    Rng rng(seed);
    DeviceCalibration calib;
    const auto cmw = sample_cmw_population(n, rng, 0.2, 0.6);
    std::cout << "device,cmw_fraction,tau_ms,settled_capacitance\n";
    for (int i = 0; i < n; ++i) {
        auto dev = MemcapacitorDevice::from_cmw(1.25, cmw[static_cast<std::size_t>(i)], 8);
        program_capacitance(dev, dev.n_levels - 1);
        const double c = dev.capacitance();
        std::printf("%d,%.6f,%.6f,%.6f\n", i, dev.cmw_fraction(),
                    tau_from_capacitance(c, calib) * 1e3,
                    settled_capacitance(dev, calib));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hardware-aware RSNN trainer with memristor weights and "
                 "memcapacitor time constants"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string export_dir = "export";
    std::string summary_path;
    std::int64_t seed_offset = 0;
    int jobs = 1;
    bool dry_run = false;
    int n_devices = 20;
    std::uint64_t dev_seed = 0;

    auto* run = app.add_subcommand("run", "execute the experiment grid");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "override the output directory");
    run->add_option("--seed-offset", seed_offset, "shift every seed by this amount");
    run->add_option("--jobs", jobs, "concurrent grid cells")->check(CLI::PositiveNumber);
    run->add_flag("--dry-run", dry_run, "validate and print the resolved grid only");

    auto* validate = app.add_subcommand("validate", "validate a config file");
    validate->add_option("config", config_path, "experiment config (JSON)")->required();

    auto* exp = app.add_subcommand("export", "emit plot-ready CSVs from a summary");
    exp->add_option("summary", summary_path, "summary.json from a grid run")->required();
    exp->add_option("--config", config_path, "config used for the run (optional)");
    exp->add_option("--out", export_dir, "output directory");

    auto* devices = app.add_subcommand("devices", "print sampled device populations");
    devices->add_option("-n", n_devices, "population size");
    devices->add_option("--seed", dev_seed, "sampling seed");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(run))
        return cmd_run(config_path, out_dir, seed_offset, jobs, dry_run);
    if (app.got_subcommand(validate)) return cmd_validate(config_path);
    if (app.got_subcommand(exp))
        return cmd_export(summary_path, config_path, export_dir);
    if (app.got_subcommand(devices)) return cmd_devices(n_devices, dev_seed);
    return 1;
}
