#include "memsnn/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace memsnn {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string Condition::name() const {
    std::string n = memcapacitor ? "memcap" : "nomemcap";
    n += heterogeneous ? "_het" : "_hom";
    n += trainable_tau ? "_traintau" : "_fixtau";
    return n;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] != b[j - 1] ? 1 : 0);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) != allowed.end())
            continue;
        std::string best;
        std::size_t best_d = std::string::npos;
        for (const auto& cand : allowed) {
            const std::size_t d = edit_distance(key, cand);
            if (d < best_d) {
                best_d = d;
                best = cand;
            }
        }
        throw std::invalid_argument("unknown key \"" + key + "\" in " + where +
                                    " (did you mean \"" + best + "\"?)");
    }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parse_train(const json& j, TrainConfig& t) {
    check_keys(j,
               {"epochs", "batch_size", "lr_weights", "lr_tau", "optimizer",
                "momentum", "grad_clip", "eval_noise_draws"},
               "train");
    get_if(j, "epochs", t.epochs);
    get_if(j, "batch_size", t.batch_size);
    get_if(j, "lr_weights", t.lr_weights);
    get_if(j, "lr_tau", t.lr_tau);
    get_if(j, "momentum", t.momentum);
    get_if(j, "grad_clip", t.grad_clip);
    get_if(j, "eval_noise_draws", t.eval_noise_draws);
    if (j.contains("optimizer")) {
        const auto s = j.at("optimizer").get<std::string>();
        if (s == "adam")
            t.optimizer = OptimizerKind::Adam;
        else if (s == "sgd_momentum")
            t.optimizer = OptimizerKind::SgdMomentum;
        else
            throw std::invalid_argument(
                "optimizer must be \"adam\" or \"sgd_momentum\", got \"" + s +
                "\"");
    }
    if (t.epochs < 0 || t.batch_size < 1 || t.lr_weights <= 0 || t.lr_tau <= 0)
        throw std::invalid_argument("invalid training hyperparameters");
}

void parse_network(const json& j, NetworkConfig& n) {
    check_keys(j,
               {"dt", "threshold", "beta_sg", "w_in_gain", "w_rec_gain",
                "w_out_gain", "tau_center", "tau_out", "tau_spread",
                "quantization_enabled", "levels_per_polarity", "g_max",
                "w_scale", "sigma_c2c", "noise_w_in", "noise_w_rec",
                "noise_w_out", "tau_per_capacitance", "g_per_current",
                "disturb_settle_pulses", "disturb_depth"},
               "network");
    get_if(j, "dt", n.dt);
    get_if(j, "threshold", n.threshold);
    get_if(j, "beta_sg", n.beta_sg);
    get_if(j, "w_in_gain", n.w_in_gain);
    get_if(j, "w_rec_gain", n.w_rec_gain);
    get_if(j, "w_out_gain", n.w_out_gain);
    get_if(j, "tau_center", n.tau_center);
    get_if(j, "tau_out", n.tau_out);
    get_if(j, "tau_spread", n.tau_spread);
    get_if(j, "quantization_enabled", n.crossbar.quantization_enabled);
    get_if(j, "levels_per_polarity", n.crossbar.levels_per_polarity);
    get_if(j, "g_max", n.crossbar.g_max);
    get_if(j, "w_scale", n.crossbar.w_scale);
    get_if(j, "sigma_c2c", n.crossbar.sigma_c2c);
    get_if(j, "noise_w_in", n.noise_w_in);
    get_if(j, "noise_w_rec", n.noise_w_rec);
    get_if(j, "noise_w_out", n.noise_w_out);
    get_if(j, "tau_per_capacitance", n.calibration.tau_per_capacitance);
    get_if(j, "g_per_current", n.calibration.g_per_current);
    get_if(j, "disturb_settle_pulses", n.calibration.disturb_settle_pulses);
    get_if(j, "disturb_depth", n.calibration.disturb_depth);
    n.calibration.validate();
}

void parse_synthetic(const json& j, SyntheticConfig& s) {
    check_keys(j,
               {"n_classes", "n_channels", "T", "dt", "samples_per_class",
                "spikes_per_channel", "jitter_steps", "corruption"},
               "synthetic");
    get_if(j, "n_classes", s.n_classes);
    get_if(j, "n_channels", s.n_channels);
    get_if(j, "T", s.T);
    get_if(j, "dt", s.dt);
    get_if(j, "samples_per_class", s.samples_per_class);
    get_if(j, "spikes_per_channel", s.spikes_per_channel);
    get_if(j, "jitter_steps", s.jitter_steps);
    get_if(j, "corruption", s.corruption);
}

ExperimentConfig parse_config_json(const json& j) {
    check_keys(j,
               {"sizes", "conditions", "seeds", "dataset_path", "synthetic",
                "dataset_seed", "valid_fraction", "train", "network",
                "out_dir"},
               "config root");
    ExperimentConfig cfg;
    get_if(j, "sizes", cfg.sizes);
    get_if(j, "seeds", cfg.seeds);
    get_if(j, "dataset_seed", cfg.dataset_seed);
    get_if(j, "valid_fraction", cfg.valid_fraction);
    get_if(j, "out_dir", cfg.out_dir);
    if (j.contains("dataset_path"))
        cfg.dataset_path = j.at("dataset_path").get<std::string>();
    if (j.contains("conditions")) {
        cfg.conditions.clear();
        for (const auto& jc : j.at("conditions")) {
            check_keys(jc, {"memcapacitor", "heterogeneous", "trainable_tau"},
                       "conditions[]");
            Condition c;
            get_if(jc, "memcapacitor", c.memcapacitor);
            get_if(jc, "heterogeneous", c.heterogeneous);
            get_if(jc, "trainable_tau", c.trainable_tau);
            cfg.conditions.push_back(c);
        }
    }
    if (j.contains("synthetic")) parse_synthetic(j.at("synthetic"), cfg.synthetic);
    if (j.contains("train")) parse_train(j.at("train"), cfg.train);
    if (j.contains("network")) parse_network(j.at("network"), cfg.network);

    if (cfg.seeds.empty()) throw std::invalid_argument("need at least one seed");
    if (cfg.conditions.empty())
        throw std::invalid_argument("need at least one condition");
    if (cfg.sizes.empty()) throw std::invalid_argument("need at least one size");
    for (int s : cfg.sizes)
        if (s < 1) throw std::invalid_argument("network sizes must be positive");
    return cfg;
}

}  // namespace

ExperimentConfig validate_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot read config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config parse error in " + path + ": " +
                                    e.what());
    }
    return parse_config_json(j);
}

std::string config_echo(const ExperimentConfig& cfg) {
    json j;
    j["sizes"] = cfg.sizes;
    j["seeds"] = cfg.seeds;
    j["dataset_seed"] = cfg.dataset_seed;
    j["valid_fraction"] = cfg.valid_fraction;
    j["out_dir"] = cfg.out_dir;
    if (cfg.dataset_path) j["dataset_path"] = *cfg.dataset_path;
    j["conditions"] = json::array();
    for (const auto& c : cfg.conditions)
        j["conditions"].push_back({{"memcapacitor", c.memcapacitor},
                                   {"heterogeneous", c.heterogeneous},
                                   {"trainable_tau", c.trainable_tau}});
    j["synthetic"] = {{"n_classes", cfg.synthetic.n_classes},
                      {"n_channels", cfg.synthetic.n_channels},
                      {"T", cfg.synthetic.T},
                      {"dt", cfg.synthetic.dt},
                      {"samples_per_class", cfg.synthetic.samples_per_class},
                      {"spikes_per_channel", cfg.synthetic.spikes_per_channel},
                      {"jitter_steps", cfg.synthetic.jitter_steps},
                      {"corruption", cfg.synthetic.corruption}};
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"lr_weights", cfg.train.lr_weights},
                  {"lr_tau", cfg.train.lr_tau},
                  {"optimizer", cfg.train.optimizer == OptimizerKind::Adam
                                    ? "adam"
                                    : "sgd_momentum"},
                  {"momentum", cfg.train.momentum},
                  {"grad_clip", cfg.train.grad_clip},
                  {"eval_noise_draws", cfg.train.eval_noise_draws}};
    const auto& n = cfg.network;
    j["network"] = {{"dt", n.dt},
                    {"threshold", n.threshold},
                    {"beta_sg", n.beta_sg},
                    {"w_in_gain", n.w_in_gain},
                    {"w_rec_gain", n.w_rec_gain},
                    {"w_out_gain", n.w_out_gain},
                    {"tau_center", n.tau_center},
                    {"tau_out", n.tau_out},
                    {"tau_spread", n.tau_spread},
                    {"quantization_enabled", n.crossbar.quantization_enabled},
                    {"levels_per_polarity", n.crossbar.levels_per_polarity},
                    {"g_max", n.crossbar.g_max},
                    {"w_scale", n.crossbar.w_scale},
                    {"sigma_c2c", n.crossbar.sigma_c2c},
                    {"noise_w_in", n.noise_w_in},
                    {"noise_w_rec", n.noise_w_rec},
                    {"noise_w_out", n.noise_w_out},
                    {"tau_per_capacitance", n.calibration.tau_per_capacitance},
                    {"g_per_current", n.calibration.g_per_current},
                    {"disturb_settle_pulses", n.calibration.disturb_settle_pulses},
                    {"disturb_depth", n.calibration.disturb_depth}};
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Grid execution

namespace {

std::string cell_tag(const Condition& cond, int size, std::int64_t seed) {
    return cond.name() + "_" + std::to_string(size) + "_s" +
           std::to_string(seed);
}

EventDataset obtain_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_path) return load_events(*cfg.dataset_path);
    Rng rng(cfg.dataset_seed);
    return generate_synthetic(cfg.synthetic, rng);
}

}  // namespace

RunSummary run_cell(const ExperimentConfig& cfg, const Condition& cond,
                    int size, std::int64_t seed,
                    const std::vector<SpikeRaster>& train_set,
                    const std::vector<SpikeRaster>& valid_set) {
    NetworkConfig ncfg = cfg.network;
    ncfg.n_in = static_cast<int>(train_set.front().data.cols());
    ncfg.n_hidden = size;
    ncfg.heterogeneous_tau = cond.heterogeneous;
    ncfg.trainable_tau = cond.trainable_tau;
    ncfg.memcapacitor_mode = cond.memcapacitor;

    TrainConfig tcfg = cfg.train;
    tcfg.seed = static_cast<std::uint64_t>(seed);

    Rng rng(tcfg.seed ^ 0x9e3779b97f4a7c15ULL);
    Network net = build_rsnn(ncfg, rng);
    TrainResult tr = train(net, train_set, valid_set, tcfg);

    const fs::path out(cfg.out_dir);
    const std::string tag = cell_tag(cond, size, seed);
    write_metrics_csv(tr.metrics, (out / ("metrics_" + tag + ".csv")).string());
    save_checkpoint(tr.best, (out / ("checkpoint_" + tag + ".bin")).string());

    Rng eval_rng(tcfg.seed ^ 0xda3e39cb94b95bdbULL);
    const EvalResult ev =
        evaluate(tr.best, valid_set, tcfg.eval_noise_draws, eval_rng);
    return {cond.name(), size, seed, ev.acc_mean, ev.acc_std};
}

GridSummary run_grid(const ExperimentConfig& cfg, int jobs) {
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream os(fs::path(cfg.out_dir) / "resolved_config.json");
        os << config_echo(cfg) << '\n';
    }

    EventDataset full = obtain_dataset(cfg);
    if (full.samples.empty()) throw std::runtime_error("dataset is empty");
    Rng split_rng(cfg.dataset_seed + 1);
    auto [train_ds, valid_ds] = split_dataset(full, cfg.valid_fraction, split_rng);
    const auto train_set = bin_dataset(train_ds, cfg.synthetic.dt, cfg.synthetic.T);
    const auto valid_set = bin_dataset(valid_ds, cfg.synthetic.dt, cfg.synthetic.T);

    struct Cell {
        Condition cond;
        int size;
        std::int64_t seed;
    };
    std::vector<Cell> cells;
    for (int size : cfg.sizes)
        for (const auto& cond : cfg.conditions)
            for (std::int64_t seed : cfg.seeds) cells.push_back({cond, size, seed});

    GridSummary summary;
    summary.runs.resize(cells.size());
    std::vector<bool> done(cells.size(), false);
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::vector<std::string> errors;

    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= cells.size()) return;
            const auto& c = cells[k];
            try {
                RunSummary rs =
                    run_cell(cfg, c.cond, c.size, c.seed, train_set, valid_set);
                std::lock_guard<std::mutex> lock(mu);
                summary.runs[k] = rs;
                done[k] = true;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                errors.push_back(cell_tag(c.cond, c.size, c.seed) + ": " +
                                 e.what());
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (!errors.empty()) {
        json manifest;
        manifest["completed"] = json::array();
        for (std::size_t k = 0; k < cells.size(); ++k)
            if (done[k])
                manifest["completed"].push_back(
                    cell_tag(cells[k].cond, cells[k].size, cells[k].seed));
        manifest["failed"] = errors;
        std::ofstream os(fs::path(cfg.out_dir) / "manifest_partial.json");
        os << manifest.dump(2) << '\n';
        throw std::runtime_error("grid run failed: " + errors.front());
    }

    // aggregate across seeds per (condition, size), preserving grid order
    for (int size : cfg.sizes) {
        for (const auto& cond : cfg.conditions) {
            std::vector<double> accs;
            for (const auto& r : summary.runs)
                if (r.condition == cond.name() && r.size == size)
                    accs.push_back(r.accuracy);
            GridSummary::Cell cell;
            cell.condition = cond.name();
            cell.size = size;
            const double n = static_cast<double>(accs.size());
            double mean = 0.0;
            for (double a : accs) mean += a;
            mean /= n;
            double ss = 0.0;
            for (double a : accs) ss += (a - mean) * (a - mean);
            cell.acc_mean = mean;
            cell.acc_std = accs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
            summary.cells.push_back(cell);
        }
    }

    write_summary_csv(summary, (fs::path(cfg.out_dir) / "summary.csv").string());
    write_summary_json(summary, (fs::path(cfg.out_dir) / "summary.json").string());
    return summary;
}

void write_summary_csv(const GridSummary& summary, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open summary file: " + path);
    os << "condition,size,acc_mean,acc_std\n";
    os.precision(12);
    for (const auto& c : summary.cells)
        os << c.condition << ',' << c.size << ',' << c.acc_mean << ','
           << c.acc_std << '\n';
}

void write_summary_json(const GridSummary& summary, const std::string& path) {
    json j;
    j["runs"] = json::array();
    for (const auto& r : summary.runs)
        j["runs"].push_back({{"condition", r.condition},
                             {"size", r.size},
                             {"seed", r.seed},
                             {"accuracy", r.accuracy},
                             {"accuracy_std", r.accuracy_std}});
    j["cells"] = json::array();
    for (const auto& c : summary.cells)
        j["cells"].push_back({{"condition", c.condition},
                              {"size", c.size},
                              {"acc_mean", c.acc_mean},
                              {"acc_std", c.acc_std}});
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open summary file: " + path);
    os << j.dump(2) << '\n';
}

GridSummary load_summary_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read summary: " + path);
    json j;
    is >> j;
    GridSummary s;
    for (const auto& jr : j.at("runs")) {
        RunSummary r;
        r.condition = jr.at("condition").get<std::string>();
        r.size = jr.at("size").get<int>();
        r.seed = jr.at("seed").get<std::int64_t>();
        r.accuracy = jr.at("accuracy").get<double>();
        r.accuracy_std = jr.at("accuracy_std").get<double>();
        s.runs.push_back(r);
    }
    for (const auto& jc : j.at("cells")) {
        GridSummary::Cell c;
        c.condition = jc.at("condition").get<std::string>();
        c.size = jc.at("size").get<int>();
        c.acc_mean = jc.at("acc_mean").get<double>();
        c.acc_std = jc.at("acc_std").get<double>();
        s.cells.push_back(c);
    }
    return s;
}

void export_plot_data(const GridSummary& summary, const ExperimentConfig& cfg,
                      const std::string& out_dir) {
    fs::create_directories(out_dir);
    {
        // Fig. 6 analogue: grouped bars with error bars
        std::ofstream os(fs::path(out_dir) / "accuracy_by_condition.csv");
        os << "condition,size,acc_mean,acc_std\n";
        os.precision(12);
        for (const auto& c : summary.cells)
            os << c.condition << ',' << c.size << ',' << c.acc_mean << ','
               << c.acc_std << '\n';
    }
    {
        // tau distribution histogram from the heterogeneous sampler
        std::ofstream os(fs::path(out_dir) / "tau_histogram.csv");
        os << "bin_lo_ms,bin_hi_ms,count\n";
        NetworkConfig ncfg = cfg.network;
        ncfg.n_hidden = 10000;
        ncfg.heterogeneous_tau = true;
        Rng rng(cfg.dataset_seed);
        Network net = build_rsnn(ncfg, rng);
        const Vec& tau = net.tau.tau_mem_base;
        const double lo = tau.minCoeff() * 1e3;
        const double hi = tau.maxCoeff() * 1e3;
        constexpr int kBins = 40;
        std::vector<int> hist(kBins, 0);
        for (Eigen::Index i = 0; i < tau.size(); ++i) {
            int b = static_cast<int>((tau[i] * 1e3 - lo) / (hi - lo) * kBins);
            b = std::clamp(b, 0, kBins - 1);
            ++hist[static_cast<std::size_t>(b)];
        }
        os.precision(9);
        for (int b = 0; b < kBins; ++b) {
            const double w = (hi - lo) / kBins;
            os << lo + b * w << ',' << lo + (b + 1) * w << ','
               << hist[static_cast<std::size_t>(b)] << '\n';
        }
    }
    {
        // conductance level table (Fig. 5b analogue)
        std::ofstream os(fs::path(out_dir) / "conductance_levels.csv");
        os << "level,conductance\n";
        os.precision(12);
        const auto& cb = cfg.network.crossbar;
        for (int l = 0; l < cb.levels_per_polarity; ++l)
            os << l << ','
               << cb.g_max * l / (cb.levels_per_polarity - 1) << '\n';
    }
}

}  // namespace memsnn
