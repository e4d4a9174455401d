#include "memsnn/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace memsnn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

EffectiveTau effective_tau(const TauBank& bank) {
    // backed off one ulp-scale step so the +-r bound stays strict even when
    // tanh saturates to exactly 1 in double precision
    const double r = bank.modulation_range * (1.0 - 1e-12);
    EffectiveTau eff;
    eff.tau_mem = bank.tau_mem_base.cwiseProduct(
        (1.0 + r * bank.p_mem.array().tanh()).matrix());
    eff.tau_syn = bank.tau_syn_base.cwiseProduct(
        (1.0 + r * bank.p_syn.array().tanh()).matrix());
    return eff;
}

// Heterogeneous tau: CMW fractions sampled uniformly, mapped linearly
// through capacitance to tau so tau lands uniform on
// [tau_center*(1-h), tau_center*(1+h)]. In memcapacitor mode each source
// capacitance is taken at its read-disturb-settled value.
static Vec sample_tau_bank(const NetworkConfig& cfg, Rng& rng) {
    const int n = cfg.n_hidden;
    Vec tau(n);
    if (!cfg.heterogeneous_tau) {
        tau.setConstant(cfg.tau_center);
        return tau;
    }
    const double h = cfg.tau_spread;
    if (h <= 0.0 || h >= 1.0)
        throw std::invalid_argument("tau_spread must lie in (0, 1)");
    // cmw fraction f in [0.5(1-h), 0.5(1+h)], capacitance c = c_mid * f / 0.5
    // where c_mid is the capacitance that calibrates to tau_center.
    const double lo = 0.5 * (1.0 - h);
    const double hi = 0.5 * (1.0 + h);
    const double c_mid = cfg.tau_center / cfg.calibration.tau_per_capacitance;
    auto fractions = sample_cmw_population(n, rng, lo, hi);
    for (int i = 0; i < n; ++i) {
        double c = c_mid * fractions[static_cast<std::size_t>(i)] / 0.5;
        if (cfg.memcapacitor_mode) {
            // settle factor proportional to position inside the window
            const double level_fraction = (fractions[static_cast<std::size_t>(i)] - lo) / (hi - lo);
            c *= 1.0 - cfg.calibration.disturb_depth * level_fraction;
        }
        tau[i] = tau_from_capacitance(c, cfg.calibration);
    }
    return tau;
}

Network build_rsnn(const NetworkConfig& cfg, Rng& rng) {
    if (cfg.n_in < 1 || cfg.n_hidden < 1 || cfg.n_out < 1)
        throw std::invalid_argument("network sizes must be positive");
    if (cfg.dt <= 0.0 || cfg.tau_center <= cfg.dt)
        throw std::invalid_argument("require tau_center > dt > 0");
    cfg.calibration.validate();

    Network net;
    net.cfg = cfg;

    auto init = [&rng](Eigen::Index rows, Eigen::Index cols, double gain) {
        std::normal_distribution<double> dist(0.0, 1.0);
        Mat w(rows, cols);
        const double scale = gain / std::sqrt(static_cast<double>(rows));
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = scale * dist(rng);
        return w;
    };
    net.w_in = init(cfg.n_in, cfg.n_hidden, cfg.w_in_gain);
    net.w_rec = init(cfg.n_hidden, cfg.n_hidden, cfg.w_rec_gain);
    net.w_out = init(cfg.n_hidden, cfg.n_out, cfg.w_out_gain);

    net.tau.tau_mem_base = sample_tau_bank(cfg, rng);
    net.tau.tau_syn_base = sample_tau_bank(cfg, rng);
    net.tau.tau_out = cfg.tau_out;
    net.tau.p_mem = Vec::Zero(cfg.n_hidden);
    net.tau.p_syn = Vec::Zero(cfg.n_hidden);
    net.tau.modulation_range = 0.05;
    return net;
}

Vec crossbar_mac(const Mat& g_plus, const Mat& g_minus, const Vec& s,
                 double scale) {
    if (g_plus.rows() != g_minus.rows() || g_plus.cols() != g_minus.cols() ||
        s.size() != g_plus.rows())
        throw std::invalid_argument("crossbar_mac: shape mismatch");
    Vec out = Vec::Zero(g_plus.cols());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] == 0.0) continue;
        out += s[i] * (g_plus.row(i) - g_minus.row(i)).transpose();
    }
    return out * scale;
}

static Mat realize_matrix(const Mat& w, const CrossbarConfig& cb,
                          bool noise_enabled, Rng& rng) {
    if (!cb.quantization_enabled && (cb.sigma_c2c == 0.0 || !noise_enabled))
        return w;
    if (!cb.quantization_enabled) {
        // noise applied on the conductance representation of the ideal weights
        Mat g_plus = w.cwiseMax(0.0) * (cb.g_max / cb.w_scale);
        Mat g_minus = (-w).cwiseMax(0.0) * (cb.g_max / cb.w_scale);
        g_plus = apply_cycle_noise(g_plus, cb.sigma_c2c, rng);
        g_minus = apply_cycle_noise(g_minus, cb.sigma_c2c, rng);
        return (g_plus - g_minus) * (cb.w_scale / cb.g_max);
    }
    QuantizedMatrix q =
        quantize_weights(w, cb.levels_per_polarity, cb.g_max, cb.w_scale);
    if (noise_enabled && cb.sigma_c2c > 0.0) {
        q.g_plus = apply_cycle_noise(q.g_plus, cb.sigma_c2c, rng);
        q.g_minus = apply_cycle_noise(q.g_minus, cb.sigma_c2c, rng);
    }
    return reconstruct_weights(q, cb.g_max, cb.w_scale);
}

RealizedWeights realize_weights(const Network& net, Rng& rng) {
    const auto& cb = net.cfg.crossbar;
    RealizedWeights rw;
    rw.w_in = realize_matrix(net.w_in, cb, net.cfg.noise_w_in, rng);
    rw.w_rec = realize_matrix(net.w_rec, cb, net.cfg.noise_w_rec, rng);
    rw.w_out = realize_matrix(net.w_out, cb, net.cfg.noise_w_out, rng);
    return rw;
}

ForwardTrace forward(const Network& net, const SpikeRaster& raster, Rng& rng,
                     SpikeMode mode) {
    const auto& cfg = net.cfg;
    if (raster.data.cols() != cfg.n_in)
        throw std::invalid_argument("raster channel count != n_in");
    const Eigen::Index T = raster.data.rows();
    const int H = cfg.n_hidden;

    ForwardTrace tr;
    tr.weights = realize_weights(net, rng);

    const EffectiveTau taus = effective_tau(net.tau);
    const Vec beta_mem = decay_factors(cfg.dt, taus.tau_mem);
    const Vec beta_syn = decay_factors(cfg.dt, taus.tau_syn);
    const double beta_out = decay_factor(cfg.dt, net.tau.tau_out);
    const Vec one = Vec::Ones(H);

    tr.readout = Mat::Zero(T, cfg.n_out);
    tr.hidden_spikes = Mat::Zero(T, H);
    tr.i_syn = Mat::Zero(T, H);
    tr.v_pre = Mat::Zero(T, H);
    tr.syn_input = Mat::Zero(T, H);

    Vec i_syn = Vec::Zero(H);
    Vec v = Vec::Zero(H);
    Vec s = Vec::Zero(H);
    Vec y = Vec::Zero(cfg.n_out);

    for (Eigen::Index t = 0; t < T; ++t) {
        const Vec x = raster.data.row(t).transpose();
        const Vec cur = tr.weights.w_in.transpose() * x +
                        tr.weights.w_rec.transpose() * s;
        i_syn = beta_syn.cwiseProduct(i_syn) +
                (one - beta_syn).cwiseProduct(cur);
        Vec v_pre = beta_mem.cwiseProduct(v) +
                    (one - beta_mem).cwiseProduct(i_syn);
        Vec s_new(H);
        if (mode == SpikeMode::Hard) {
            for (int i = 0; i < H; ++i)
                s_new[i] = v_pre[i] >= cfg.threshold ? 1.0 : 0.0;
        } else {
            for (int i = 0; i < H; ++i)
                s_new[i] = smooth_spike(v_pre[i] - cfg.threshold, cfg.beta_sg);
        }
        v = v_pre - cfg.threshold * s_new;
        s = s_new;
        y = beta_out * y +
            (1.0 - beta_out) * (tr.weights.w_out.transpose() * s);

        tr.syn_input.row(t) = cur.transpose();
        tr.i_syn.row(t) = i_syn.transpose();
        tr.v_pre.row(t) = v_pre.transpose();
        tr.hidden_spikes.row(t) = s.transpose();
        tr.readout.row(t) = y.transpose();
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Checkpoint container

namespace {

constexpr char kMagic[8] = {'M', 'C', 'R', 'S', 'N', 'N', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint truncated");
    return v;
}

void write_matrix(std::ostream& os, const Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) write_pod(os, m(i, j));
}

Mat read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = read_pod<double>(is);
    return m;
}

}  // namespace

void save_checkpoint(const Network& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.cfg.n_in));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.cfg.n_hidden));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.cfg.n_out));
    std::uint8_t flags = 0;
    if (net.cfg.heterogeneous_tau) flags |= 1;
    if (net.cfg.trainable_tau) flags |= 2;
    if (net.cfg.memcapacitor_mode) flags |= 4;
    write_pod(os, flags);
    write_pod(os, net.cfg.dt);
    write_pod(os, net.cfg.threshold);
    write_pod(os, net.cfg.beta_sg);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(
                                     net.cfg.crossbar.levels_per_polarity));
    write_pod<std::uint8_t>(os, net.cfg.crossbar.quantization_enabled ? 1 : 0);
    write_pod(os, net.cfg.crossbar.g_max);
    write_pod(os, net.cfg.crossbar.w_scale);
    write_pod(os, net.cfg.crossbar.sigma_c2c);

    write_matrix(os, net.w_in);
    write_matrix(os, net.w_rec);
    write_matrix(os, net.w_out);
    write_matrix(os, net.tau.tau_mem_base);
    write_matrix(os, net.tau.tau_syn_base);
    write_pod(os, net.tau.tau_out);
    write_matrix(os, net.tau.p_mem);
    write_matrix(os, net.tau.p_syn);
    write_pod(os, net.tau.modulation_range);
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

Network load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("bad checkpoint magic: " + path);

    Network net;
    net.cfg.n_in = static_cast<int>(read_pod<std::uint32_t>(is));
    net.cfg.n_hidden = static_cast<int>(read_pod<std::uint32_t>(is));
    net.cfg.n_out = static_cast<int>(read_pod<std::uint32_t>(is));
    const auto flags = read_pod<std::uint8_t>(is);
    net.cfg.heterogeneous_tau = flags & 1;
    net.cfg.trainable_tau = flags & 2;
    net.cfg.memcapacitor_mode = flags & 4;
    net.cfg.dt = read_pod<double>(is);
    net.cfg.threshold = read_pod<double>(is);
    net.cfg.beta_sg = read_pod<double>(is);
    net.cfg.crossbar.levels_per_polarity =
        static_cast<int>(read_pod<std::uint32_t>(is));
    net.cfg.crossbar.quantization_enabled = read_pod<std::uint8_t>(is) != 0;
    net.cfg.crossbar.g_max = read_pod<double>(is);
    net.cfg.crossbar.w_scale = read_pod<double>(is);
    net.cfg.crossbar.sigma_c2c = read_pod<double>(is);

    const auto H = net.cfg.n_hidden;
    net.w_in = read_matrix(is, net.cfg.n_in, H);
    net.w_rec = read_matrix(is, H, H);
    net.w_out = read_matrix(is, H, net.cfg.n_out);
    net.tau.tau_mem_base = read_matrix(is, H, 1);
    net.tau.tau_syn_base = read_matrix(is, H, 1);
    net.tau.tau_out = read_pod<double>(is);
    net.tau.p_mem = read_matrix(is, H, 1);
    net.tau.p_syn = read_matrix(is, H, 1);
    net.tau.modulation_range = read_pod<double>(is);
    return net;
}

}  // namespace memsnn
