#pragma once

// Discrete-time LIF neuron and first-order DPI synapse primitives with a
// surrogate-gradient spike nonlinearity. Exponential-Euler discretization:
// exact decay with zero-order-hold input, so pure decay is exact in double
// precision.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace memsnn {

using Vec = Eigen::VectorXd;

struct NeuronParams {
    Vec tau_mem;             // seconds, per neuron
    double threshold = 1.0;  // normalized units (0.6 V physical ceiling)
    double dt = 1e-3;        // seconds
};

struct SynapseParams {
    Vec tau_syn;  // seconds, per post-population
    double dt = 1e-3;
};

struct LayerState {
    Vec i_syn;
    Vec v_mem;
    Vec s;

    static LayerState zero(Eigen::Index n) {
        return {Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)};
    }
};

// beta = exp(-dt/tau), the exact one-step decay of an RC stage.
inline double decay_factor(double dt, double tau) {
    if (dt <= 0.0 || tau <= 0.0)
        throw std::domain_error("dt and tau must be positive");
    return std::exp(-dt / tau);
}

inline Vec decay_factors(double dt, const Vec& tau) {
    Vec beta(tau.size());
    for (Eigen::Index i = 0; i < tau.size(); ++i)
        beta[i] = decay_factor(dt, tau[i]);
    return beta;
}

// First-order low-pass synaptic current update with unit DC gain:
//   i' = beta .* i + (1 - beta) .* in
inline Vec dpi_step(const Vec& i_syn, const Vec& in_current, const Vec& beta_syn) {
    if (i_syn.size() != in_current.size() || i_syn.size() != beta_syn.size())
        throw std::invalid_argument("dpi_step: shape mismatch");
    return beta_syn.cwiseProduct(i_syn) +
           (Vec::Ones(i_syn.size()) - beta_syn).cwiseProduct(in_current);
}

inline Vec dpi_step(const Vec& i_syn, const Vec& in_current, const SynapseParams& p) {
    return dpi_step(i_syn, in_current, decay_factors(p.dt, p.tau_syn));
}

// Surrogate spike derivative: 1 / (beta_sg * |x| + 1)^2, the fast-sigmoid
// derivative. Used as dS/dv in the backward pass while the forward pass
// keeps a hard threshold.
inline double surrogate_grad(double x, double beta_sg) {
    if (beta_sg <= 0.0) throw std::domain_error("beta_sg must be positive");
    const double d = beta_sg * std::abs(x) + 1.0;
    return 1.0 / (d * d);
}

// Smooth spike relaxation paired exactly with its derivative; used by the
// gradient-verification path where the loss must be differentiable end to
// end. Maps R -> (0, 1) with value 1/2 at threshold.
inline double smooth_spike(double x, double beta_sg) {
    return 0.5 * (1.0 + beta_sg * x / (1.0 + beta_sg * std::abs(x)));
}

inline double smooth_spike_grad(double x, double beta_sg) {
    const double d = 1.0 + beta_sg * std::abs(x);
    return 0.5 * beta_sg / (d * d);
}

struct LifStepResult {
    LayerState state;
    Vec spikes;
};

// Membrane update, hard threshold, subtractive reset:
//   v' = beta .* v + (1 - beta) .* i_in
//   s  = H(v' - theta);  v'' = v' - theta * s
inline LifStepResult lif_step(const LayerState& state, const Vec& i_in,
                              const Vec& beta_mem, double threshold) {
    if (state.v_mem.size() != i_in.size() || i_in.size() != beta_mem.size())
        throw std::invalid_argument("lif_step: shape mismatch");
    const Eigen::Index n = i_in.size();
    Vec v = beta_mem.cwiseProduct(state.v_mem) +
            (Vec::Ones(n) - beta_mem).cwiseProduct(i_in);
    Vec s(n);
    for (Eigen::Index i = 0; i < n; ++i) s[i] = v[i] >= threshold ? 1.0 : 0.0;
    v -= threshold * s;
    LifStepResult res;
    res.state = {state.i_syn, v, s};
    res.spikes = s;
    return res;
}

inline LifStepResult lif_step(const LayerState& state, const Vec& i_in,
                              const NeuronParams& p) {
    return lif_step(state, i_in, decay_factors(p.dt, p.tau_mem), p.threshold);
}

}  // namespace memsnn
