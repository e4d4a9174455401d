#pragma once

// Phenomenological device models for the unified memcapacitor/memristor
// stack: multi-level capacitance states with capacitive-memory-window (CMW)
// variability and read-disturb settling, and differential memristor pairs
// with quantized conductance levels and cycle-to-cycle noise.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace memsnn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Rng = std::mt19937_64;

// Calibration constants anchoring normalized device units to physical
// quantities. No absolute capacitance/conductance values are assumed;
// the defaults map the mid capacitance level to tau = 20 ms.
struct DeviceCalibration {
    double tau_per_capacitance = 0.016;  // seconds per capacitance unit
    double g_per_current = 1.0;          // siemens per ampere
    int disturb_settle_pulses = 10;
    double disturb_depth = 0.05;         // hard cap from measurement

    void validate() const;
};

// A single memcapacitor: non-volatile multi-level capacitance state.
// c_low/c_high span the device's memory window; cmw_fraction is the
// relative window (c_high - c_low) / c_high.
struct MemcapacitorDevice {
    double c_low;
    double c_high;
    int n_levels;             // L_c
    int level = 0;
    std::int64_t disturb_pulses_seen = 0;

    // Builds a device from its high state and relative memory window.
    static MemcapacitorDevice from_cmw(double c_high, double cmw_fraction,
                                       int n_levels);

    double cmw_fraction() const { return (c_high - c_low) / c_high; }
    double capacitance() const;
};

// Differential conductance pair encoding one signed weight.
struct MemristorPair {
    double g_plus = 0.0;
    double g_minus = 0.0;
};

// Quantization/noise settings shared by all crossbar mappings.
struct CrossbarConfig {
    bool quantization_enabled = true;
    int levels_per_polarity = 16;  // L_g
    double g_max = 1.0;
    double w_scale = 8.0;
    double sigma_c2c = 0.05;
};

// Draws n i.i.d. CMW fractions uniform on [lo, hi]. Deterministic given rng.
std::vector<double> sample_cmw_population(int n, Rng& rng, double lo, double hi);

// Programs the device to the given level index; capacitance becomes
// c_low + level * (c_high - c_low) / (L_c - 1). Resets the disturb counter.
void program_capacitance(MemcapacitorDevice& dev, int level);

// Capacitance trace under a train of read pulses. trace[0] is the programmed
// value C0; trace[k] relaxes exponentially to
//   Cinf = C0 * (1 - disturb_depth * level_fraction)
// with settling constant calib.disturb_settle_pulses. The lowest state is
// undisturbed (level_fraction = 0) and the total drop never exceeds
// disturb_depth (<= 5%).
std::vector<double> apply_read_disturb(MemcapacitorDevice& dev, int n_pulses,
                                       const DeviceCalibration& calib);

// Settled capacitance after the initial read-disturb decrease, i.e. the
// asymptote of apply_read_disturb.
double settled_capacitance(const MemcapacitorDevice& dev,
                           const DeviceCalibration& calib);

// Linear capacitance-to-time-constant map, tau = tau_per_capacitance * c.
double tau_from_capacitance(double c, const DeviceCalibration& calib);

// Conductance programmed under SET compliance current i_cc: linear map
// g_per_current * i_cc snapped to the nearest admissible level.
double conductance_from_current(double i_cc, const DeviceCalibration& calib,
                                const std::vector<double>& level_set);

// Differential quantization of a real weight matrix onto per-polarity
// conductance grids {0, g_max/(L_g-1), ..., g_max}. |w| is clipped to
// w_scale; exactly one of (g_plus, g_minus) is nonzero per entry.
struct QuantizedMatrix {
    Mat g_plus;
    Mat g_minus;
};

QuantizedMatrix quantize_weights(const Mat& w, int levels_per_polarity,
                                 double g_max, double w_scale);

// Inverse of the quantization scaling: (g_plus - g_minus) * w_scale / g_max.
Mat reconstruct_weights(const QuantizedMatrix& q, double g_max, double w_scale);

// Multiplicative cycle-to-cycle read noise: g * (1 + eps),
// eps ~ N(0, sigma^2), clamped to >= 0. Zero conductances stay exactly zero
// and consume no random draws; sigma = 0 returns the input unchanged.
Mat apply_cycle_noise(const Mat& g, double sigma_c2c, Rng& rng);

}  // namespace memsnn
