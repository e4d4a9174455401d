#include "memsnn/devices.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

using namespace memsnn;

namespace {

double ks_statistic_uniform(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = (xs[i] - lo) / (hi - lo);
        const double hi_step = static_cast<double>(i + 1) / n;
        const double lo_step = static_cast<double>(i) / n;
        d = std::max({d, std::abs(hi_step - f), std::abs(f - lo_step)});
    }
    return d;
}

MemcapacitorDevice make_device() {
    // window [1.0, 1.5] with 5 levels: mid level = 1.25
    auto dev = MemcapacitorDevice::from_cmw(1.5, 1.0 / 3.0, 5);
    CHECK(dev.c_low == doctest::Approx(1.0));
    return dev;
}

}  // namespace

TEST_CASE("cmw sampling rejects invalid bounds") {
    Rng rng(0);
    CHECK_THROWS_AS(sample_cmw_population(3, rng, 0.5, 0.5), std::out_of_range);
    CHECK_THROWS_AS(sample_cmw_population(3, rng, 0.0, 0.5), std::out_of_range);
    CHECK_THROWS_AS(sample_cmw_population(3, rng, 0.6, 0.2), std::out_of_range);
    CHECK_THROWS_AS(sample_cmw_population(0, rng, 0.2, 0.6), std::out_of_range);
}

TEST_CASE("cmw sampling statistics on [0.2, 0.6]") {
    Rng rng(42);
    const auto xs = sample_cmw_population(10000, rng, 0.2, 0.6);
    double mean = 0.0, mn = 1.0, mx = 0.0;
    for (double x : xs) {
        mean += x;
        mn = std::min(mn, x);
        mx = std::max(mx, x);
    }
    mean /= static_cast<double>(xs.size());
    CHECK(mean == doctest::Approx(0.4).epsilon(0.025));  // 0.4 +- 0.01
    CHECK(std::abs(mean - 0.4) < 0.01);
    CHECK(mn >= 0.2);
    CHECK(mx <= 0.6);

    // independent large-sample oracle for the interval mean
    Rng oracle_rng(7);
    std::uniform_real_distribution<double> u(0.2, 0.6);
    double oracle_mean = 0.0;
    for (int i = 0; i < 1000000; ++i) oracle_mean += u(oracle_rng);
    oracle_mean /= 1e6;
    CHECK(std::abs(mean - oracle_mean) < 0.01);
}

TEST_CASE("cmw sampling is deterministic given the seed") {
    Rng a(99), b(99);
    CHECK(sample_cmw_population(1, a, 0.3, 0.7) ==
          sample_cmw_population(1, b, 0.3, 0.7));
}

TEST_CASE("empirical cdf of 1e5 samples is uniform (KS < 0.01)") {
    Rng rng(3);
    const auto xs = sample_cmw_population(100000, rng, 0.2, 0.6);
    CHECK(ks_statistic_uniform(xs, 0.2, 0.6) < 0.01);
}

TEST_CASE("capacitance programming endpoints and interpolation") {
    auto dev = make_device();
    program_capacitance(dev, 0);
    CHECK(dev.capacitance() == doctest::Approx(dev.c_low));
    program_capacitance(dev, dev.n_levels - 1);
    CHECK(dev.capacitance() == doctest::Approx(dev.c_high));
    program_capacitance(dev, 2);
    CHECK(dev.capacitance() == doctest::Approx(1.25));
    CHECK(dev.disturb_pulses_seen == 0);
    CHECK_THROWS_AS(program_capacitance(dev, 5), std::out_of_range);
    CHECK_THROWS_AS(program_capacitance(dev, -1), std::out_of_range);
}

TEST_CASE("read disturb trace") {
    DeviceCalibration calib;
    auto dev = make_device();

    SUBCASE("zero pulses returns the programmed value only") {
        program_capacitance(dev, 3);
        const auto trace = apply_read_disturb(dev, 0, calib);
        REQUIRE(trace.size() == 1);
        CHECK(trace[0] == doctest::Approx(dev.capacitance()));
    }

    SUBCASE("zero depth gives a constant trace") {
        calib.disturb_depth = 0.0;
        program_capacitance(dev, 4);
        const auto trace = apply_read_disturb(dev, 50, calib);
        for (double c : trace) CHECK(c == doctest::Approx(trace[0]));
    }

    SUBCASE("closed-form value at k = settle") {
        // top level so level_fraction = 1: trace[10] = 0.95 + 0.05/e of C0
        auto top = MemcapacitorDevice::from_cmw(1.0, 0.5, 2);
        program_capacitance(top, 1);  // C0 = 1.0
        calib.disturb_depth = 0.05;
        calib.disturb_settle_pulses = 10;
        const auto trace = apply_read_disturb(top, 10, calib);
        CHECK(trace[10] ==
              doctest::Approx(0.95 + 0.05 * std::exp(-1.0)).epsilon(1e-12));
        CHECK(trace[10] == doctest::Approx(0.9684).epsilon(1e-4));
    }

    SUBCASE("monotone non-increasing, capped at 5%, lowest state untouched") {
        for (int level = 0; level < dev.n_levels; ++level) {
            program_capacitance(dev, level);
            const auto trace = apply_read_disturb(dev, 200, calib);
            for (std::size_t k = 1; k < trace.size(); ++k) {
                CHECK(trace[k] <= trace[k - 1] + 1e-15);
                CHECK(trace[k] >= 0.95 * trace[0]);
            }
            if (level == 0) CHECK(trace.back() == doctest::Approx(trace[0]));
        }
    }
}

TEST_CASE("tau from capacitance") {
    DeviceCalibration calib;  // 0.016 s per unit
    CHECK(tau_from_capacitance(1.25, calib) == doctest::Approx(20e-3));
    CHECK(tau_from_capacitance(2.5, calib) ==
          doctest::Approx(2.0 * tau_from_capacitance(1.25, calib)));
    CHECK_THROWS_AS(tau_from_capacitance(0.0, calib), std::domain_error);
    CHECK_THROWS_AS(tau_from_capacitance(-1.0, calib), std::domain_error);

    // strictly increasing
    double prev = 0.0;
    for (double c = 0.1; c < 3.0; c += 0.1) {
        const double tau = tau_from_capacitance(c, calib);
        CHECK(tau > prev);
        prev = tau;
    }
}

TEST_CASE("conductance from compliance current snaps to the level set") {
    DeviceCalibration calib;
    calib.g_per_current = 1.0;  // 1 uS per uA in normalized units
    const std::vector<double> levels = {0.0, 10.0, 20.0, 40.0};
    CHECK(conductance_from_current(0.0, calib, levels) == 0.0);
    CHECK(conductance_from_current(18.0, calib, levels) == 20.0);
    CHECK_THROWS_AS(conductance_from_current(-1.0, calib, levels),
                    std::domain_error);

    double prev = -1.0;
    for (double i = 0.0; i < 50.0; i += 0.5) {
        const double g = conductance_from_current(i, calib, levels);
        CHECK(g >= prev);
        prev = g;
    }
}

TEST_CASE("differential weight quantization") {
    const double g_max = 1.0, w_scale = 1.0;

    SUBCASE("zero and saturation endpoints") {
        Mat w(1, 2);
        w << 0.0, 1.0;
        const auto q = quantize_weights(w, 5, g_max, w_scale);
        CHECK(q.g_plus(0, 0) == 0.0);
        CHECK(q.g_minus(0, 0) == 0.0);
        CHECK(q.g_plus(0, 1) == doctest::Approx(g_max));
        CHECK(q.g_minus(0, 1) == 0.0);
    }

    SUBCASE("nearest level on the enumerated grid") {
        Mat w(1, 1);
        w << 0.3;
        const auto q = quantize_weights(w, 5, g_max, w_scale);
        // grid {0, .25, .5, .75, 1}: nearest to 0.3 is 0.25
        CHECK(q.g_plus(0, 0) == doctest::Approx(0.25));
        const Mat rec = reconstruct_weights(q, g_max, w_scale);
        CHECK(std::abs(rec(0, 0) - 0.3) == doctest::Approx(0.05));
    }

    SUBCASE("reconstruction within half a step, one polarity nonzero") {
        Rng rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Mat w(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) w(i, j) = u(rng);
        const int L = 16;
        const auto q = quantize_weights(w, L, g_max, w_scale);
        const Mat rec = reconstruct_weights(q, g_max, w_scale);
        const double half_step = 0.5 * w_scale / (L - 1);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                CHECK(std::abs(rec(i, j) - w(i, j)) <= half_step + 1e-15);
                CHECK((q.g_plus(i, j) == 0.0 || q.g_minus(i, j) == 0.0));
            }
    }

    SUBCASE("quantization is idempotent on quantized weights") {
        Rng rng(6);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        Mat w(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) w(i, j) = u(rng);
        const auto q1 = quantize_weights(w, 8, g_max, w_scale);
        const Mat rec1 = reconstruct_weights(q1, g_max, w_scale);
        const auto q2 = quantize_weights(rec1, 8, g_max, w_scale);
        const Mat rec2 = reconstruct_weights(q2, g_max, w_scale);
        CHECK((rec1 - rec2).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("non-finite weights rejected") {
        Mat w(1, 1);
        w << std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(quantize_weights(w, 4, g_max, w_scale),
                        std::invalid_argument);
    }
}

TEST_CASE("cycle-to-cycle noise") {
    SUBCASE("sigma 0 is the identity") {
        Rng rng(1);
        Mat g = Mat::Constant(3, 3, 0.5);
        CHECK((apply_cycle_noise(g, 0.0, rng) - g).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("zeros stay exactly zero") {
        Rng rng(2);
        Mat g = Mat::Zero(4, 4);
        const Mat out = apply_cycle_noise(g, 0.3, rng);
        CHECK(out.cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("negative sigma rejected") {
        Rng rng(3);
        Mat g = Mat::Ones(1, 1);
        CHECK_THROWS_AS(apply_cycle_noise(g, -0.1, rng), std::domain_error);
    }

    SUBCASE("Monte Carlo moments at sigma = 0.05") {
        Rng rng(4);
        Mat g = Mat::Ones(1000, 1000);
        const Mat out = apply_cycle_noise(g, 0.05, rng);
        const double mean = out.mean();
        double var = 0.0;
        for (int j = 0; j < out.cols(); ++j)
            for (int i = 0; i < out.rows(); ++i)
                var += (out(i, j) - mean) * (out(i, j) - mean);
        var /= static_cast<double>(out.size()) - 1.0;
        CHECK(mean >= 0.999);
        CHECK(mean <= 1.001);
        CHECK(std::sqrt(var) >= 0.049);
        CHECK(std::sqrt(var) <= 0.051);
    }
}
