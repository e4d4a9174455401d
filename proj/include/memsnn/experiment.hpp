#pragma once

// Declarative experiment grid: sizes x conditions x seeds, each cell a full
// build/train/evaluate run, aggregated into fixed-schema CSV summaries and
// plot-ready exports.

#include "memsnn/dataset.hpp"
#include "memsnn/training.hpp"

#include <optional>
#include <string>
#include <vector>

namespace memsnn {

struct Condition {
    bool memcapacitor = false;
    bool heterogeneous = false;
    bool trainable_tau = false;

    // stable identifier used in file names and summary rows
    std::string name() const;
};

struct ExperimentConfig {
    std::vector<int> sizes = {64, 128};
    std::vector<Condition> conditions = {
        {false, false, false},  // "No Memcapacitor" baseline
        {true, true, false},
        {true, true, true},
    };
    std::vector<std::int64_t> seeds = {0, 1, 2, 3, 4};

    // dataset: either a .evd file or the synthetic generator
    std::optional<std::string> dataset_path;
    SyntheticConfig synthetic;
    std::uint64_t dataset_seed = 1234;
    double valid_fraction = 0.2;

    TrainConfig train;
    NetworkConfig network;  // sizes/mode flags overridden per grid cell
    std::string out_dir = "runs";
};

// Parses and validates a JSON experiment config. Unknown keys are rejected
// with the nearest valid key named; all defaults are filled in.
ExperimentConfig validate_config(const std::string& path);

// Resolved-config echo: every effective setting, serialized back to JSON.
std::string config_echo(const ExperimentConfig& cfg);

struct RunSummary {
    std::string condition;
    int size = 0;
    std::int64_t seed = 0;
    double accuracy = 0.0;
    double accuracy_std = 0.0;  // across noise draws
};

struct GridSummary {
    std::vector<RunSummary> runs;
    // aggregated per (condition, size): mean +- sigma across seeds
    struct Cell {
        std::string condition;
        int size = 0;
        double acc_mean = 0.0;
        double acc_std = 0.0;
    };
    std::vector<Cell> cells;
};

// Trains and evaluates one grid cell; returns its summary and writes the
// per-epoch metrics CSV and the best checkpoint under cfg.out_dir.
RunSummary run_cell(const ExperimentConfig& cfg, const Condition& cond,
                    int size, std::int64_t seed,
                    const std::vector<SpikeRaster>& train_set,
                    const std::vector<SpikeRaster>& valid_set);

// Runs the full grid (sizes outer, conditions inner, seeds innermost),
// writing per-run artifacts, summary.csv, and summary.json. On failure a
// partial-results manifest lists the completed runs. jobs > 1 runs cells
// concurrently.
GridSummary run_grid(const ExperimentConfig& cfg, int jobs = 1);

void write_summary_csv(const GridSummary& summary, const std::string& path);
void write_summary_json(const GridSummary& summary, const std::string& path);
GridSummary load_summary_json(const std::string& path);

// Plot-ready exports: Fig-style accuracy table (condition,size,acc_mean,
// acc_std), a tau-distribution histogram, and a device conductance-level
// table.
void export_plot_data(const GridSummary& summary, const ExperimentConfig& cfg,
                      const std::string& out_dir);

}  // namespace memsnn
