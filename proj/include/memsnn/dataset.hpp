#pragma once

// Event-based dataset handling: a portable labeled spike-event file format
// (".evd"), binning into dense spike rasters, and a synthetic
// temporal-classification generator whose classes differ only in spike
// timing (identical per-channel spike counts).

#include "memsnn/network.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace memsnn {

struct SpikeEvent {
    std::uint64_t time_us;
    std::uint32_t channel;

    bool operator==(const SpikeEvent&) const = default;
};

struct EventSample {
    std::vector<SpikeEvent> events;  // time-sorted
    std::uint32_t label = 0;
    std::uint64_t duration_us = 0;

    bool operator==(const EventSample&) const = default;
};

struct EventDataset {
    std::vector<EventSample> samples;
    std::uint32_t n_channels = 0;
    std::uint32_t n_classes = 0;
    std::string name;
};

// raster[t][c] = 1 iff at least one channel-c event falls in
// [t*dt, (t+1)*dt); events beyond T*dt are dropped, multiple events per bin
// collapse to a single 1.
SpikeRaster bin_events(const EventSample& sample, double dt, int T,
                       int n_channels);

std::vector<SpikeRaster> bin_dataset(const EventDataset& ds, double dt, int T);

struct SyntheticConfig {
    int n_classes = 4;
    int n_channels = 32;
    int T = 100;                  // timesteps per sample
    double dt = 1e-3;
    int samples_per_class = 200;
    int spikes_per_channel = 3;   // identical across classes: rate-blind
    double jitter_steps = 3.0;    // Gaussian time jitter std, in timesteps
    double corruption = 0.05;     // per-event drop prob, matched spurious rate
};

// Each class is a fixed random spatiotemporal template; samples are the
// template under per-event Gaussian jitter plus dropped/spurious events.
// Per-channel spike counts of the templates are identical across classes,
// so classes are separable only through timing.
EventDataset generate_synthetic(const SyntheticConfig& cfg, Rng& rng);

// ".evd" container: magic "EVD1", little-endian; header u32 n_channels,
// u32 n_classes, u64 n_samples; per sample u64 n_events, u32 label,
// u64 duration_us, then n_events x (u64 time_us, u32 channel).
void save_events(const EventDataset& ds, const std::string& path);
EventDataset load_events(const std::string& path);

// Deterministic split into (train, valid) with valid_fraction of each class
// held out.
std::pair<EventDataset, EventDataset> split_dataset(const EventDataset& ds,
                                                    double valid_fraction,
                                                    Rng& rng);

}  // namespace memsnn
