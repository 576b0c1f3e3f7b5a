#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfr/nn/adam.hpp"
#include "sfr/np/model.hpp"
#include "sfr/sim/dataset.hpp"

namespace sfr::np {

struct TrainConfig {
    NpConfig model;
    nn::LrSchedule schedule;
    int epochs = 300;
    std::uint64_t seed = 0;
    int ctx_min = 3;
    int ctx_max = 50;
    /// Train with exactly this many contexts when > 0.
    int fixed_ctx = 0;
    int extra_min = 32;
    int extra_max = 256;
    int tasks_per_step = 1;
    int latent_samples = 1;
    /// Write the checkpoint every this many epochs (0 = only at the end).
    int checkpoint_every = 0;
    std::filesystem::path checkpoint_path;
    std::filesystem::path log_path;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    std::int64_t step = 0;
    double l_d = 0.0;
    double kl = 0.0;
    double lr = 0.0;
    double wall_ms = 0.0;
};

/// One JSON object per line: {"epoch","step","l_d","kl","lr","wall_ms"}.
std::string format_log_record(const EpochRecord& r);

struct TrainResult {
    NeuralProcess model;
    nn::OptimizerState optimizer;
    std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Single-threaded; bit-reproducible from `config.seed`.
TrainResult train(const sim::Dataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace sfr::np
