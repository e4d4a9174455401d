#include "memsnn/experiment.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace memsnn;
namespace fs = std::filesystem;

namespace {

fs::path write_config(const std::string& body, const std::string& name) {
    const auto path = fs::temp_directory_path() / name;
    std::ofstream os(path);
    os << body;
    return path;
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// small, fast grid: one size, one condition, one seed, one epoch
std::string tiny_grid_config(const std::string& out_dir) {
    return R"({
      "sizes": [8],
      "conditions": [{"memcapacitor": false, "heterogeneous": false, "trainable_tau": false}],
      "seeds": [0],
      "synthetic": {"n_classes": 2, "n_channels": 8, "T": 30, "samples_per_class": 10},
      "train": {"epochs": 1, "batch_size": 4, "eval_noise_draws": 2},
      "out_dir": ")" + out_dir + R"("
    })";
}

}  // namespace

TEST_CASE("config validation") {
    SUBCASE("minimal config is fully defaulted") {
        const auto path = write_config(R"({"synthetic": {"n_classes": 4}})",
                                       "memsnn_cfg_min.json");
        const auto cfg = validate_config(path.string());
        CHECK(cfg.sizes == std::vector<int>{64, 128});
        CHECK(cfg.seeds.size() == 5);
        CHECK(cfg.conditions.size() == 3);
        CHECK(cfg.train.epochs == 50);
        CHECK(cfg.network.crossbar.sigma_c2c == 0.05);
        const std::string echo = config_echo(cfg);
        CHECK(echo.find("\"lr_weights\"") != std::string::npos);
        CHECK(echo.find("\"sigma_c2c\"") != std::string::npos);
        fs::remove(path);
    }

    SUBCASE("unknown key rejected with a suggestion") {
        const auto path = write_config(
            R"({"train": {"learnig_rate": 0.1}})", "memsnn_cfg_typo.json");
        try {
            validate_config(path.string());
            FAIL("expected rejection");
        } catch (const std::invalid_argument& e) {
            const std::string msg = e.what();
            CHECK(msg.find("learnig_rate") != std::string::npos);
            CHECK(msg.find("did you mean") != std::string::npos);
        }
        fs::remove(path);
    }

    SUBCASE("negative seeds are accepted") {
        const auto path =
            write_config(R"({"seeds": [-3, 0, 7]})", "memsnn_cfg_seeds.json");
        const auto cfg = validate_config(path.string());
        CHECK(cfg.seeds == std::vector<std::int64_t>{-3, 0, 7});
        fs::remove(path);
    }

    SUBCASE("malformed JSON rejected") {
        const auto path = write_config("{not json", "memsnn_cfg_bad.json");
        CHECK_THROWS_AS(validate_config(path.string()), std::invalid_argument);
        fs::remove(path);
    }

    SUBCASE("empty conditions rejected") {
        const auto path =
            write_config(R"({"conditions": []})", "memsnn_cfg_nocond.json");
        CHECK_THROWS_AS(validate_config(path.string()), std::invalid_argument);
        fs::remove(path);
    }
}

TEST_CASE("grid run artifacts and determinism") {
    const auto out1 = fs::temp_directory_path() / "memsnn_grid1";
    const auto out2 = fs::temp_directory_path() / "memsnn_grid2";
    fs::remove_all(out1);
    fs::remove_all(out2);

    const auto cfg_path1 = write_config(tiny_grid_config(out1.string()),
                                        "memsnn_cfg_grid1.json");
    const auto cfg_path2 = write_config(tiny_grid_config(out2.string()),
                                        "memsnn_cfg_grid2.json");
    const auto cfg1 = validate_config(cfg_path1.string());
    const auto cfg2 = validate_config(cfg_path2.string());

    const auto s1 = run_grid(cfg1);
    const auto s2 = run_grid(cfg2);

    SUBCASE("summary has one row per (condition, size)") {
        CHECK(s1.cells.size() == 1);
        CHECK(s1.runs.size() == 1);
        CHECK(s1.cells[0].condition == "nomemcap_hom_fixtau");
        CHECK(s1.cells[0].size == 8);
        CHECK(s1.cells[0].acc_std == 0.0);  // single seed
    }

    SUBCASE("identical configs give byte-identical summaries") {
        CHECK(read_file(out1 / "summary.csv") == read_file(out2 / "summary.csv"));
        CHECK(read_file(out1 / "summary.json") == read_file(out2 / "summary.json"));
    }

    SUBCASE("per-run artifacts exist") {
        CHECK(fs::exists(out1 / "metrics_nomemcap_hom_fixtau_8_s0.csv"));
        CHECK(fs::exists(out1 / "checkpoint_nomemcap_hom_fixtau_8_s0.bin"));
        CHECK(fs::exists(out1 / "resolved_config.json"));
    }

    SUBCASE("summary sigma matches a direct recomputation") {
        // re-run with three seeds to get a nontrivial sigma
        auto cfg3 = cfg1;
        cfg3.seeds = {0, 1, 2};
        cfg3.out_dir = (fs::temp_directory_path() / "memsnn_grid3").string();
        fs::remove_all(cfg3.out_dir);
        const auto s3 = run_grid(cfg3);
        REQUIRE(s3.runs.size() == 3);
        double mean = 0.0;
        for (const auto& r : s3.runs) mean += r.accuracy;
        mean /= 3.0;
        double ss = 0.0;
        for (const auto& r : s3.runs) ss += (r.accuracy - mean) * (r.accuracy - mean);
        const double sigma = std::sqrt(ss / 2.0);
        CHECK(s3.cells[0].acc_mean == doctest::Approx(mean).epsilon(1e-12));
        CHECK(s3.cells[0].acc_std == doctest::Approx(sigma).epsilon(1e-12));
        fs::remove_all(cfg3.out_dir);
    }

    SUBCASE("summary json round trip") {
        const auto back = load_summary_json((out1 / "summary.json").string());
        REQUIRE(back.cells.size() == s1.cells.size());
        CHECK(back.cells[0].acc_mean == s1.cells[0].acc_mean);
        CHECK(back.runs[0].seed == s1.runs[0].seed);
    }

    SUBCASE("export emits fixed-schema plot CSVs") {
        const auto exp_dir = out1 / "export";
        export_plot_data(s1, cfg1, exp_dir.string());
        const std::string acc = read_file(exp_dir / "accuracy_by_condition.csv");
        CHECK(acc.rfind("condition,size,acc_mean,acc_std\n", 0) == 0);
        CHECK(fs::exists(exp_dir / "tau_histogram.csv"));
        CHECK(fs::exists(exp_dir / "conductance_levels.csv"));
    }

    SUBCASE("empty summary exports header-only accuracy CSV") {
        const auto exp_dir = out1 / "export_empty";
        export_plot_data(GridSummary{}, cfg1, exp_dir.string());
        CHECK(read_file(exp_dir / "accuracy_by_condition.csv") ==
              "condition,size,acc_mean,acc_std\n");
    }

    fs::remove(cfg_path1);
    fs::remove(cfg_path2);
    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("parallel grid matches sequential") {
    const auto out_seq = fs::temp_directory_path() / "memsnn_grid_seq";
    const auto out_par = fs::temp_directory_path() / "memsnn_grid_par";
    fs::remove_all(out_seq);
    fs::remove_all(out_par);
    const auto p1 = write_config(tiny_grid_config(out_seq.string()),
                                 "memsnn_cfg_seq.json");
    const auto p2 = write_config(tiny_grid_config(out_par.string()),
                                 "memsnn_cfg_par.json");
    auto cfg_seq = validate_config(p1.string());
    auto cfg_par = validate_config(p2.string());
    cfg_seq.seeds = {0, 1};
    cfg_par.seeds = {0, 1};

    run_grid(cfg_seq, 1);
    run_grid(cfg_par, 2);
    CHECK(read_file(out_seq / "summary.csv") == read_file(out_par / "summary.csv"));

    fs::remove(p1);
    fs::remove(p2);
    fs::remove_all(out_seq);
    fs::remove_all(out_par);
}
