#include "memsnn/devices.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace memsnn {

void DeviceCalibration::validate() const {
    if (tau_per_capacitance <= 0.0)
        throw std::invalid_argument("tau_per_capacitance must be positive");
    if (g_per_current <= 0.0)
        throw std::invalid_argument("g_per_current must be positive");
    if (disturb_settle_pulses <= 0)
        throw std::invalid_argument("disturb_settle_pulses must be positive");
    if (disturb_depth < 0.0 || disturb_depth > 0.05)
        throw std::invalid_argument("disturb_depth must lie in [0, 0.05]");
}

MemcapacitorDevice MemcapacitorDevice::from_cmw(double c_high,
                                                double cmw_fraction,
                                                int n_levels) {
    if (c_high <= 0.0)
        throw std::invalid_argument("c_high must be positive");
    if (cmw_fraction <= 0.0 || cmw_fraction > 1.0)
        throw std::invalid_argument("cmw_fraction must lie in (0, 1]");
    if (n_levels < 2)
        throw std::invalid_argument("need at least two capacitance levels");
    MemcapacitorDevice dev;
    dev.c_high = c_high;
    dev.c_low = c_high * (1.0 - cmw_fraction);
    dev.n_levels = n_levels;
    if (dev.c_low >= dev.c_high)
        throw std::invalid_argument("degenerate memory window");
    return dev;
}

double MemcapacitorDevice::capacitance() const {
    return c_low + static_cast<double>(level) * (c_high - c_low) /
                       static_cast<double>(n_levels - 1);
}

std::vector<double> sample_cmw_population(int n, Rng& rng, double lo,
                                          double hi) {
    if (n < 1) throw std::out_of_range("population size must be >= 1");
    if (lo <= 0.0 || lo >= hi || hi > 1.0)
        throw std::out_of_range("CMW bounds must satisfy 0 < lo < hi <= 1");
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = dist(rng);
    return out;
}

void program_capacitance(MemcapacitorDevice& dev, int level) {
    if (level < 0 || level >= dev.n_levels)
        throw std::out_of_range("capacitance level out of range");
    dev.level = level;
    dev.disturb_pulses_seen = 0;
}

static double level_fraction(const MemcapacitorDevice& dev) {
    return static_cast<double>(dev.level) /
           static_cast<double>(dev.n_levels - 1);
}

double settled_capacitance(const MemcapacitorDevice& dev,
                           const DeviceCalibration& calib) {
    const double c0 = dev.capacitance();
    return c0 * (1.0 - calib.disturb_depth * level_fraction(dev));
}

std::vector<double> apply_read_disturb(MemcapacitorDevice& dev, int n_pulses,
                                       const DeviceCalibration& calib) {
    if (n_pulses < 0) throw std::out_of_range("pulse count must be >= 0");
    const double c0 = dev.capacitance();
    const double cinf = settled_capacitance(dev, calib);
    std::vector<double> trace(static_cast<std::size_t>(n_pulses) + 1);
    for (int k = 0; k <= n_pulses; ++k) {
        trace[static_cast<std::size_t>(k)] =
            cinf + (c0 - cinf) *
                       std::exp(-static_cast<double>(k) /
                                static_cast<double>(calib.disturb_settle_pulses));
    }
    dev.disturb_pulses_seen += n_pulses;
    return trace;
}

double tau_from_capacitance(double c, const DeviceCalibration& calib) {
    if (c <= 0.0) throw std::domain_error("capacitance must be positive");
    return calib.tau_per_capacitance * c;
}

double conductance_from_current(double i_cc, const DeviceCalibration& calib,
                                const std::vector<double>& level_set) {
    if (i_cc < 0.0) throw std::domain_error("compliance current must be >= 0");
    if (level_set.empty() || level_set.front() != 0.0)
        throw std::invalid_argument("level_set must start at 0");
    if (!std::is_sorted(level_set.begin(), level_set.end()))
        throw std::invalid_argument("level_set must be strictly increasing");
    const double g = calib.g_per_current * i_cc;
    double best = level_set.front();
    double best_dist = std::abs(g - best);
    for (double lvl : level_set) {
        const double d = std::abs(g - lvl);
        if (d < best_dist) {
            best = lvl;
            best_dist = d;
        }
    }
    return best;
}

QuantizedMatrix quantize_weights(const Mat& w, int levels_per_polarity,
                                 double g_max, double w_scale) {
    if (levels_per_polarity < 2)
        throw std::invalid_argument("need at least two conductance levels");
    if (g_max <= 0.0 || w_scale <= 0.0)
        throw std::invalid_argument("g_max and w_scale must be positive");
    if (!w.allFinite()) throw std::invalid_argument("non-finite weights");

    const double steps = static_cast<double>(levels_per_polarity - 1);
    QuantizedMatrix q;
    q.g_plus = Mat::Zero(w.rows(), w.cols());
    q.g_minus = Mat::Zero(w.rows(), w.cols());
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            const double wij = w(i, j);
            const double mag = std::min(std::abs(wij), w_scale);
            const double g = std::round(mag / w_scale * steps) / steps * g_max;
            if (wij > 0.0)
                q.g_plus(i, j) = g;
            else if (wij < 0.0)
                q.g_minus(i, j) = g;
        }
    }
    return q;
}

Mat reconstruct_weights(const QuantizedMatrix& q, double g_max,
                        double w_scale) {
    return (q.g_plus - q.g_minus) * (w_scale / g_max);
}

Mat apply_cycle_noise(const Mat& g, double sigma_c2c, Rng& rng) {
    if (sigma_c2c < 0.0) throw std::domain_error("sigma_c2c must be >= 0");
    if (sigma_c2c == 0.0) return g;
    std::normal_distribution<double> dist(0.0, sigma_c2c);
    Mat out = g;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            if (out(i, j) == 0.0) continue;
            out(i, j) = std::max(0.0, out(i, j) * (1.0 + dist(rng)));
        }
    }
    return out;
}

}  // namespace memsnn
