#pragma once

// BPTT with surrogate gradients over the unrolled RSNN. Weights are trained
// straight-through across the crossbar quantization (forward quantized+noisy,
// gradients taken w.r.t. the underlying real-valued matrices); time constants
// are trained through the bounded tanh reparameterization.

#include "memsnn/dataset.hpp"
#include "memsnn/network.hpp"

#include <string>
#include <vector>

namespace memsnn {

enum class OptimizerKind { Adam, SgdMomentum };

struct TrainConfig {
    int epochs = 50;
    int batch_size = 32;
    double lr_weights = 5e-3;
    double lr_tau = 5e-4;  // tau parameters are few and bounded
    OptimizerKind optimizer = OptimizerKind::Adam;
    double momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip = 10.0;  // global norm bound
    std::uint64_t seed = 0;
    int eval_noise_draws = 3;
};

struct Gradients {
    Mat d_w_in;
    Mat d_w_rec;
    Mat d_w_out;
    Vec d_p_mem;
    Vec d_p_syn;

    static Gradients zero(const Network& net);
};

struct LossResult {
    double loss = 0.0;
    Gradients grads;
};

// Mean cross-entropy of softmax(mean-over-time readout) against the batch
// labels, plus reverse-mode gradients through the unrolled dynamics. The
// spike mode chooses the nonlinearity pair: Hard forward + surrogate
// backward (training) or Smooth forward + exact backward (verification).
LossResult loss_and_grads(const Network& net,
                          const std::vector<SpikeRaster>& batch, Rng& rng,
                          SpikeMode mode = SpikeMode::Hard);

// Loss only, on the same forward path; the finite-difference oracle in the
// tests differentiates this.
double loss_only(const Network& net, const std::vector<SpikeRaster>& batch,
                 Rng& rng, SpikeMode mode = SpikeMode::Hard);

// Per-tensor first/second moment state (Adam) or velocity (momentum).
struct OptState {
    std::vector<Mat> m;
    std::vector<Mat> v;
    long step = 0;
};

OptState make_opt_state(const Network& net);

// One parameter update: gradients clipped to cfg.grad_clip global norm, then
// the chosen rule applied with separate learning rates for weights and tau
// parameters. The tau bound is preserved by construction of the
// reparameterization.
void optimizer_step(Network& net, const Gradients& grads, OptState& state,
                    const TrainConfig& cfg);

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double valid_acc_mean = 0.0;
    double valid_acc_std = 0.0;
    double tau_mem_min = 0.0;
    double tau_mem_max = 0.0;
};

struct TrainResult {
    Network best;  // highest validation accuracy seen
    std::vector<EpochMetrics> metrics;
};

struct EvalResult {
    double acc_mean = 0.0;
    double acc_std = 0.0;
};

// Argmax-of-mean-readout classification accuracy, repeated over independent
// cycle-noise realizations.
EvalResult evaluate(const Network& net, const std::vector<SpikeRaster>& data,
                    int n_noise_draws, Rng& rng);

TrainResult train(Network net, const std::vector<SpikeRaster>& train_set,
                  const std::vector<SpikeRaster>& valid_set,
                  const TrainConfig& cfg);

// Metrics CSV, one row per epoch:
// epoch,train_loss,valid_acc_mean,valid_acc_std,tau_mem_min,tau_mem_max
void write_metrics_csv(const std::vector<EpochMetrics>& metrics,
                       const std::string& path);

}  // namespace memsnn
