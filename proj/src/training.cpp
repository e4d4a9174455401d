#include "memsnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace memsnn {

Gradients Gradients::zero(const Network& net) {
    Gradients g;
    g.d_w_in = Mat::Zero(net.w_in.rows(), net.w_in.cols());
    g.d_w_rec = Mat::Zero(net.w_rec.rows(), net.w_rec.cols());
    g.d_w_out = Mat::Zero(net.w_out.rows(), net.w_out.cols());
    g.d_p_mem = Vec::Zero(net.tau.p_mem.size());
    g.d_p_syn = Vec::Zero(net.tau.p_syn.size());
    return g;
}

namespace {

// softmax cross-entropy on logits; returns loss and writes dL/dlogits
double softmax_xent(const Vec& logits, int label, Vec& dlogits) {
    const double m = logits.maxCoeff();
    Vec e = (logits.array() - m).exp();
    const double z = e.sum();
    Vec p = e / z;
    dlogits = p;
    dlogits[label] -= 1.0;
    return -std::log(std::max(p[label], std::numeric_limits<double>::min()));
}

struct TauDerivatives {
    Vec beta;       // exp(-dt/tau_eff)
    Vec dbeta_dp;   // chain through tau_eff = tau_base*(1 + r*tanh(p))
};

TauDerivatives tau_chain(const Vec& tau_base, const Vec& p, double r_raw,
                         double dt) {
    const double r = r_raw * (1.0 - 1e-12);  // must match effective_tau
    TauDerivatives td;
    const Eigen::Index n = tau_base.size();
    td.beta.resize(n);
    td.dbeta_dp.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double th = std::tanh(p[i]);
        const double tau = tau_base[i] * (1.0 + r * th);
        const double beta = std::exp(-dt / tau);
        td.beta[i] = beta;
        const double dbeta_dtau = beta * dt / (tau * tau);
        const double dtau_dp = tau_base[i] * r * (1.0 - th * th);
        td.dbeta_dp[i] = dbeta_dtau * dtau_dp;
    }
    return td;
}

}  // namespace

LossResult loss_and_grads(const Network& net,
                          const std::vector<SpikeRaster>& batch, Rng& rng,
                          SpikeMode mode) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const auto& cfg = net.cfg;
    const int H = cfg.n_hidden;
    const double theta = cfg.threshold;

    const double r = net.tau.modulation_range;
    const TauDerivatives mem =
        tau_chain(net.tau.tau_mem_base, net.tau.p_mem, r, cfg.dt);
    const TauDerivatives syn =
        tau_chain(net.tau.tau_syn_base, net.tau.p_syn, r, cfg.dt);
    const double beta_out = decay_factor(cfg.dt, net.tau.tau_out);
    const Vec one = Vec::Ones(H);
    const Vec one_m_bs = one - syn.beta;
    const Vec one_m_bm = one - mem.beta;

    LossResult res;
    res.grads = Gradients::zero(net);
    Vec d_beta_mem = Vec::Zero(H);
    Vec d_beta_syn = Vec::Zero(H);

    for (const auto& raster : batch) {
        if (raster.label < 0 || raster.label >= cfg.n_out)
            throw std::invalid_argument("label out of range");
        const ForwardTrace tr = forward(net, raster, rng, mode);
        const Eigen::Index T = raster.data.rows();

        const Vec y_mean = tr.readout.colwise().mean().transpose();
        Vec gy_mean;
        res.loss += softmax_xent(y_mean, raster.label, gy_mean);

        // carries from step t+1
        Vec gy_carry = Vec::Zero(cfg.n_out);
        Vec gi_carry = Vec::Zero(H);    // grad w.r.t. i_syn[t+1]
        Vec gv_carry = Vec::Zero(H);    // grad w.r.t. v[t] via v'[t+1]
        Vec gcur_carry = Vec::Zero(H);  // (1-beta_syn) .* gi_carry

        for (Eigen::Index t = T - 1; t >= 0; --t) {
            const Vec x = raster.data.row(t).transpose();
            const Vec s_t = tr.hidden_spikes.row(t).transpose();
            const Vec v_pre = tr.v_pre.row(t).transpose();
            const Vec i_t = tr.i_syn.row(t).transpose();
            const Vec cur_t = tr.syn_input.row(t).transpose();
            const Vec s_prev = t > 0 ? Vec(tr.hidden_spikes.row(t - 1).transpose())
                                     : Vec(Vec::Zero(H));
            const Vec i_prev = t > 0 ? Vec(tr.i_syn.row(t - 1).transpose())
                                     : Vec(Vec::Zero(H));
            const Vec v_prev =
                t > 0 ? Vec(tr.v_pre.row(t - 1).transpose() -
                            theta * tr.hidden_spikes.row(t - 1).transpose())
                      : Vec(Vec::Zero(H));

            const Vec gy = gy_mean / static_cast<double>(T) + beta_out * gy_carry;

            // spike gradient: surrogate for the hard threshold, exact for the
            // smooth relaxation
            Vec sg(H);
            for (int i = 0; i < H; ++i) {
                const double xv = v_pre[i] - theta;
                sg[i] = mode == SpikeMode::Hard
                            ? surrogate_grad(xv, cfg.beta_sg)
                            : smooth_spike_grad(xv, cfg.beta_sg);
            }

            const Vec gs = (1.0 - beta_out) * (tr.weights.w_out * gy) +
                           tr.weights.w_rec * gcur_carry;
            const Vec gv_pre =
                gv_carry.cwiseProduct(one - theta * sg) + gs.cwiseProduct(sg);
            const Vec gi = one_m_bm.cwiseProduct(gv_pre) +
                           syn.beta.cwiseProduct(gi_carry);
            const Vec gcur = one_m_bs.cwiseProduct(gi);

            res.grads.d_w_out += s_t * ((1.0 - beta_out) * gy).transpose();
            res.grads.d_w_in += x * gcur.transpose();
            res.grads.d_w_rec += s_prev * gcur.transpose();
            d_beta_syn += gi.cwiseProduct(i_prev - cur_t);
            d_beta_mem += gv_pre.cwiseProduct(v_prev - i_t);

            gy_carry = gy;
            gi_carry = gi;
            gv_carry = mem.beta.cwiseProduct(gv_pre);
            gcur_carry = gcur;
        }
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    res.loss *= inv_b;
    res.grads.d_w_in *= inv_b;
    res.grads.d_w_rec *= inv_b;
    res.grads.d_w_out *= inv_b;
    if (cfg.trainable_tau) {
        res.grads.d_p_mem = inv_b * d_beta_mem.cwiseProduct(mem.dbeta_dp);
        res.grads.d_p_syn = inv_b * d_beta_syn.cwiseProduct(syn.dbeta_dp);
    }
    if (!std::isfinite(res.loss))
        throw std::runtime_error("non-finite training loss");
    return res;
}

double loss_only(const Network& net, const std::vector<SpikeRaster>& batch,
                 Rng& rng, SpikeMode mode) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    double loss = 0.0;
    for (const auto& raster : batch) {
        if (raster.label < 0 || raster.label >= net.cfg.n_out)
            throw std::invalid_argument("label out of range");
        const ForwardTrace tr = forward(net, raster, rng, mode);
        const Vec y_mean = tr.readout.colwise().mean().transpose();
        Vec scratch;
        loss += softmax_xent(y_mean, raster.label, scratch);
    }
    return loss / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// Optimizers

OptState make_opt_state(const Network& net) {
    OptState st;
    auto add = [&st](Eigen::Index r, Eigen::Index c) {
        st.m.push_back(Mat::Zero(r, c));
        st.v.push_back(Mat::Zero(r, c));
    };
    add(net.w_in.rows(), net.w_in.cols());
    add(net.w_rec.rows(), net.w_rec.cols());
    add(net.w_out.rows(), net.w_out.cols());
    add(net.tau.p_mem.size(), 1);
    add(net.tau.p_syn.size(), 1);
    return st;
}

void optimizer_step(Network& net, const Gradients& grads, OptState& state,
                    const TrainConfig& cfg) {
    std::vector<Mat> g = {grads.d_w_in, grads.d_w_rec, grads.d_w_out,
                          grads.d_p_mem, grads.d_p_syn};
    std::vector<Mat*> params = {&net.w_in, &net.w_rec, &net.w_out};
    double sq_norm = 0.0;
    for (const auto& gi : g) {
        if (!gi.allFinite()) throw std::runtime_error("non-finite gradients");
        sq_norm += gi.squaredNorm();
    }
    const double norm = std::sqrt(sq_norm);
    if (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) {
        const double scale = cfg.grad_clip / norm;
        for (auto& gi : g) gi *= scale;
    }

    state.step += 1;
    auto update = [&](std::size_t k, Mat& param, double lr) {
        switch (cfg.optimizer) {
            case OptimizerKind::Adam: {
                state.m[k] = cfg.adam_beta1 * state.m[k] +
                             (1.0 - cfg.adam_beta1) * g[k];
                state.v[k] =
                    cfg.adam_beta2 * state.v[k] +
                    (1.0 - cfg.adam_beta2) * g[k].cwiseProduct(g[k]);
                const double bc1 =
                    1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
                const double bc2 =
                    1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
                const Mat mhat = state.m[k] / bc1;
                const Mat vhat = state.v[k] / bc2;
                param -= lr * mhat.cwiseQuotient(
                                  (vhat.cwiseSqrt().array() + cfg.adam_eps)
                                      .matrix());
                break;
            }
            case OptimizerKind::SgdMomentum: {
                state.m[k] = cfg.momentum * state.m[k] + g[k];
                param -= lr * state.m[k];
                break;
            }
        }
    };
    for (std::size_t k = 0; k < 3; ++k) update(k, *params[k], cfg.lr_weights);
    // tau parameters live in vectors; route through matrix views
    Mat p_mem = net.tau.p_mem;
    Mat p_syn = net.tau.p_syn;
    update(3, p_mem, cfg.lr_tau);
    update(4, p_syn, cfg.lr_tau);
    net.tau.p_mem = p_mem;
    net.tau.p_syn = p_syn;
}

// ---------------------------------------------------------------------------
// Training loop

EvalResult evaluate(const Network& net, const std::vector<SpikeRaster>& data,
                    int n_noise_draws, Rng& rng) {
    if (data.empty()) throw std::invalid_argument("empty evaluation set");
    if (n_noise_draws < 1) throw std::invalid_argument("need >= 1 noise draw");
    std::vector<double> accs;
    accs.reserve(static_cast<std::size_t>(n_noise_draws));
    for (int d = 0; d < n_noise_draws; ++d) {
        int correct = 0;
        for (const auto& raster : data) {
            const ForwardTrace tr = forward(net, raster, rng, SpikeMode::Hard);
            const Vec y_mean = tr.readout.colwise().mean().transpose();
            Eigen::Index pred;
            y_mean.maxCoeff(&pred);
            if (static_cast<int>(pred) == raster.label) ++correct;
        }
        accs.push_back(static_cast<double>(correct) /
                       static_cast<double>(data.size()));
    }
    EvalResult res;
    const double n = static_cast<double>(accs.size());
    res.acc_mean = std::accumulate(accs.begin(), accs.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : accs) ss += (a - res.acc_mean) * (a - res.acc_mean);
    res.acc_std = accs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return res;
}

TrainResult train(Network net, const std::vector<SpikeRaster>& train_set,
                  const std::vector<SpikeRaster>& valid_set,
                  const TrainConfig& cfg) {
    if (train_set.empty() || valid_set.empty())
        throw std::invalid_argument("empty dataset");
    TrainResult result;
    result.best = net;
    if (cfg.epochs == 0) return result;

    Rng rng(cfg.seed);
    OptState opt = make_opt_state(net);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    double best_acc = -1.0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        int n_batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(
                order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<SpikeRaster> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k)
                batch.push_back(train_set[order[k]]);
            const LossResult lr = loss_and_grads(net, batch, rng);
            optimizer_step(net, lr.grads, opt, cfg);
            epoch_loss += lr.loss;
            ++n_batches;
        }

        const EvalResult ev = evaluate(net, valid_set, cfg.eval_noise_draws, rng);
        const EffectiveTau taus = effective_tau(net.tau);
        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = epoch_loss / std::max(1, n_batches);
        m.valid_acc_mean = ev.acc_mean;
        m.valid_acc_std = ev.acc_std;
        m.tau_mem_min = taus.tau_mem.minCoeff();
        m.tau_mem_max = taus.tau_mem.maxCoeff();
        result.metrics.push_back(m);
        if (ev.acc_mean > best_acc) {
            best_acc = ev.acc_mean;
            result.best = net;
        }
    }
    return result;
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics,
                       const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open metrics file: " + path);
    os << "epoch,train_loss,valid_acc_mean,valid_acc_std,tau_mem_min,tau_mem_max\n";
    os.precision(12);
    for (const auto& m : metrics) {
        os << m.epoch << ',' << m.train_loss << ',' << m.valid_acc_mean << ','
           << m.valid_acc_std << ',' << m.tau_mem_min << ',' << m.tau_mem_max
           << '\n';
    }
}

}  // namespace memsnn
