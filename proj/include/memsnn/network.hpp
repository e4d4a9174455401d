#pragma once

// RSNN topology: input projection -> one recurrent hidden layer of LIF/DPI
// units -> non-spiking leaky readout. All weight matrices are realized
// through the differential crossbar mapping of the device models; time
// constants come from (optionally heterogeneous, optionally trainable)
// memcapacitor-derived banks.

#include "memsnn/devices.hpp"
#include "memsnn/snn.hpp"

#include <string>
#include <vector>

namespace memsnn {

// Trainable time-constant bank. Effective values are a smooth tanh
// reparameterization around the base:
//   tau_eff = tau_base * (1 + r * tanh(p))
// which keeps tau_eff strictly inside +-r of the base for every p, matching
// the device's capacitive memory window.
struct TauBank {
    Vec tau_mem_base;  // seconds, per hidden neuron
    Vec tau_syn_base;  // seconds, per hidden neuron
    double tau_out = 20e-3;
    Vec p_mem;
    Vec p_syn;
    double modulation_range = 0.05;  // r, the CMW-derived bound
};

struct EffectiveTau {
    Vec tau_mem;
    Vec tau_syn;
};

EffectiveTau effective_tau(const TauBank& bank);

struct SpikeRaster {
    Mat data;       // T x channels, entries in {0,1}
    double dt = 1e-3;
    int label = 0;
};

struct NetworkConfig {
    int n_in = 32;
    int n_hidden = 64;
    int n_out = 4;
    double dt = 1e-3;
    double threshold = 1.0;
    double beta_sg = 10.0;  // surrogate slope

    // init std of each matrix is gain / sqrt(fan_in)
    double w_in_gain = 30.0;
    double w_rec_gain = 5.0;
    double w_out_gain = 1.0;

    double tau_center = 20e-3;
    double tau_out = 20e-3;
    bool heterogeneous_tau = false;
    double tau_spread = 0.5;  // h: heterogeneous tau in [tau_c(1-h), tau_c(1+h)]
    bool trainable_tau = false;
    bool memcapacitor_mode = false;

    CrossbarConfig crossbar;
    // per-matrix cycle noise switches (default: noise on all three)
    bool noise_w_in = true;
    bool noise_w_rec = true;
    bool noise_w_out = true;

    DeviceCalibration calibration;
};

struct Network {
    NetworkConfig cfg;
    Mat w_in;   // n_in x n_hidden
    Mat w_rec;  // n_hidden x n_hidden
    Mat w_out;  // n_hidden x n_out
    TauBank tau;
};

// Builds a network with fan-in-scaled random weights and tau banks that are
// either homogeneous (tau_center everywhere) or sampled from the CMW
// population mapped through the capacitance-to-tau calibration. Deterministic
// given rng.
Network build_rsnn(const NetworkConfig& cfg, Rng& rng);

// In-memory MAC of a binary spike vector against a differential conductance
// pair: out_j = scale * sum_i s_i * (g_plus_ij - g_minus_ij).
Vec crossbar_mac(const Mat& g_plus, const Mat& g_minus, const Vec& s,
                 double scale);

// Weights as seen by one forward pass: quantized onto the conductance grid
// and perturbed by fresh cycle-to-cycle read noise. With quantization
// disabled and sigma = 0 these are the ideal real-valued weights.
struct RealizedWeights {
    Mat w_in;
    Mat w_rec;
    Mat w_out;
};

RealizedWeights realize_weights(const Network& net, Rng& rng);

// Full state trajectory of one forward pass; retained for BPTT.
struct ForwardTrace {
    Mat readout;        // T x n_out
    Mat hidden_spikes;  // T x n_hidden
    Mat i_syn;          // T x n_hidden (post-update)
    Mat v_pre;          // T x n_hidden (membrane before reset)
    Mat syn_input;      // T x n_hidden (crossbar drive per step)
    RealizedWeights weights;
};

// Spike nonlinearity selection: Hard = threshold forward with surrogate
// backward (training); Smooth = differentiable relaxation with its exact
// derivative (gradient verification).
enum class SpikeMode { Hard, Smooth };

ForwardTrace forward(const Network& net, const SpikeRaster& raster, Rng& rng,
                     SpikeMode mode = SpikeMode::Hard);

// Checkpoint container: magic "MCRSNN01", little-endian, row-major f64
// matrices in declared order, then tau banks.
void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

}  // namespace memsnn
