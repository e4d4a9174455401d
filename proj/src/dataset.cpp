#include "memsnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace memsnn {

SpikeRaster bin_events(const EventSample& sample, double dt, int T,
                       int n_channels) {
    if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
    if (T < 1) throw std::invalid_argument("T must be >= 1");
    SpikeRaster raster;
    raster.dt = dt;
    raster.label = static_cast<int>(sample.label);
    raster.data = Mat::Zero(T, n_channels);
    const double dt_us = dt * 1e6;
    for (const auto& ev : sample.events) {
        if (ev.channel >= static_cast<std::uint32_t>(n_channels))
            throw std::invalid_argument("event channel out of range");
        const auto t = static_cast<std::int64_t>(
            std::floor(static_cast<double>(ev.time_us) / dt_us));
        if (t >= T) continue;  // beyond the window: dropped
        raster.data(t, ev.channel) = 1.0;
    }
    return raster;
}

std::vector<SpikeRaster> bin_dataset(const EventDataset& ds, double dt, int T) {
    std::vector<SpikeRaster> out;
    out.reserve(ds.samples.size());
    for (const auto& s : ds.samples)
        out.push_back(bin_events(s, dt, T, static_cast<int>(ds.n_channels)));
    return out;
}

EventDataset generate_synthetic(const SyntheticConfig& cfg, Rng& rng) {
    if (cfg.n_classes < 2) throw std::invalid_argument("need >= 2 classes");
    if (cfg.n_channels < cfg.n_classes)
        throw std::invalid_argument("need n_channels >= n_classes");
    if (cfg.T < 2 || cfg.spikes_per_channel < 1 || cfg.samples_per_class < 1)
        throw std::invalid_argument("infeasible synthetic task parameters");

    const double dt_us = cfg.dt * 1e6;
    const auto duration_us =
        static_cast<std::uint64_t>(static_cast<double>(cfg.T) * dt_us);

    // Class templates: per channel, spikes_per_channel events at
    // class-specific random times. Counts are identical across classes.
    std::uniform_real_distribution<double> utime(0.0, static_cast<double>(cfg.T));
    std::vector<std::vector<SpikeEvent>> templates(
        static_cast<std::size_t>(cfg.n_classes));
    for (auto& tpl : templates) {
        for (std::uint32_t c = 0; c < static_cast<std::uint32_t>(cfg.n_channels); ++c) {
            for (int k = 0; k < cfg.spikes_per_channel; ++k) {
                const double t_steps = utime(rng);
                tpl.push_back({static_cast<std::uint64_t>(t_steps * dt_us), c});
            }
        }
        std::sort(tpl.begin(), tpl.end(), [](const auto& a, const auto& b) {
            return a.time_us < b.time_us;
        });
    }

    EventDataset ds;
    ds.n_channels = static_cast<std::uint32_t>(cfg.n_channels);
    ds.n_classes = static_cast<std::uint32_t>(cfg.n_classes);
    ds.name = "synthetic";

    std::normal_distribution<double> jitter(0.0, cfg.jitter_steps * dt_us);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<std::uint32_t> uchan(
        0, static_cast<std::uint32_t>(cfg.n_channels) - 1);
    std::uniform_real_distribution<double> utime_us(
        0.0, static_cast<double>(duration_us));

    const double max_time = static_cast<double>(duration_us) - 1.0;
    for (int cls = 0; cls < cfg.n_classes; ++cls) {
        const auto& tpl = templates[static_cast<std::size_t>(cls)];
        for (int n = 0; n < cfg.samples_per_class; ++n) {
            EventSample s;
            s.label = static_cast<std::uint32_t>(cls);
            s.duration_us = duration_us;
            for (const auto& ev : tpl) {
                if (cfg.corruption > 0.0 && u01(rng) < cfg.corruption)
                    continue;  // dropped event
                double t = static_cast<double>(ev.time_us);
                if (cfg.jitter_steps > 0.0) t += jitter(rng);
                t = std::clamp(t, 0.0, max_time);
                s.events.push_back({static_cast<std::uint64_t>(t), ev.channel});
            }
            const auto n_spurious = static_cast<std::size_t>(
                cfg.corruption * static_cast<double>(tpl.size()));
            for (std::size_t k = 0; k < n_spurious; ++k)
                s.events.push_back(
                    {static_cast<std::uint64_t>(utime_us(rng)), uchan(rng)});
            std::sort(s.events.begin(), s.events.end(),
                      [](const auto& a, const auto& b) {
                          return a.time_us < b.time_us;
                      });
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// .evd container

namespace {

constexpr char kEvdMagic[4] = {'E', 'V', 'D', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw std::runtime_error(std::string("truncated .evd file while reading ") +
                                 what + " at offset " +
                                 std::to_string(is.tellg()));
    return v;
}

}  // namespace

void save_events(const EventDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(kEvdMagic, sizeof(kEvdMagic));
    write_pod<std::uint32_t>(os, ds.n_channels);
    write_pod<std::uint32_t>(os, ds.n_classes);
    write_pod<std::uint64_t>(os, ds.samples.size());
    for (const auto& s : ds.samples) {
        write_pod<std::uint64_t>(os, s.events.size());
        write_pod<std::uint32_t>(os, s.label);
        write_pod<std::uint64_t>(os, s.duration_us);
        for (const auto& ev : s.events) {
            write_pod<std::uint64_t>(os, ev.time_us);
            write_pod<std::uint32_t>(os, ev.channel);
        }
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

EventDataset load_events(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kEvdMagic, sizeof(kEvdMagic)) != 0)
        throw std::runtime_error("bad .evd magic: " + path);

    EventDataset ds;
    ds.n_channels = read_pod<std::uint32_t>(is, "n_channels");
    ds.n_classes = read_pod<std::uint32_t>(is, "n_classes");
    const auto n_samples = read_pod<std::uint64_t>(is, "n_samples");
    ds.samples.reserve(n_samples);
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        EventSample s;
        const auto n_events = read_pod<std::uint64_t>(is, "n_events");
        s.label = read_pod<std::uint32_t>(is, "label");
        if (s.label >= ds.n_classes)
            throw std::runtime_error("label out of range in sample " +
                                     std::to_string(i));
        s.duration_us = read_pod<std::uint64_t>(is, "duration_us");
        s.events.reserve(n_events);
        for (std::uint64_t e = 0; e < n_events; ++e) {
            SpikeEvent ev;
            ev.time_us = read_pod<std::uint64_t>(is, "event time");
            ev.channel = read_pod<std::uint32_t>(is, "event channel");
            if (ev.channel >= ds.n_channels)
                throw std::runtime_error(
                    "channel out of range in sample " + std::to_string(i) +
                    " event " + std::to_string(e));
            s.events.push_back(ev);
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

std::pair<EventDataset, EventDataset> split_dataset(const EventDataset& ds,
                                                    double valid_fraction,
                                                    Rng& rng) {
    if (valid_fraction < 0.0 || valid_fraction >= 1.0)
        throw std::invalid_argument("valid_fraction must lie in [0, 1)");
    EventDataset train{.samples = {}, .n_channels = ds.n_channels,
                       .n_classes = ds.n_classes, .name = ds.name + "/train"};
    EventDataset valid{.samples = {}, .n_channels = ds.n_channels,
                       .n_classes = ds.n_classes, .name = ds.name + "/valid"};
    // stratified: hold out valid_fraction of each class
    for (std::uint32_t cls = 0; cls < ds.n_classes; ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.samples.size(); ++i)
            if (ds.samples[i].label == cls) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_valid = static_cast<std::size_t>(
            valid_fraction * static_cast<double>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            (k < n_valid ? valid : train).samples.push_back(ds.samples[idx[k]]);
        }
    }
    return {train, valid};
}

}  // namespace memsnn
