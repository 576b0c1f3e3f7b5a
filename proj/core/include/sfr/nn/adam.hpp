#pragma once

#include <cstdint>
#include <vector>

#include "sfr/nn/layers.hpp"

namespace sfr::nn {

struct LrSchedule {
    double base_lr = 1e-4;
    int warmup_epochs = 20;
    int decay_epoch = 200;
    double decayed_lr = 1e-5;

    /// Geometric ramp from base_lr/10 during warm-up, base_lr until
    /// decay_epoch, decayed_lr afterwards.
    double operator()(int epoch) const;
    void validate() const;
};

struct OptimizerState {
    std::int64_t step = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    LrSchedule schedule;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    /// Zero moments shaped like the store's parameters.
    static OptimizerState for_store(const ParameterStore& store, LrSchedule schedule);
};

/// One Adam update using the gradients currently held by the store.
/// Throws NonFinite (naming the parameter) before touching anything if a
/// gradient is not finite. Returns the learning rate used.
double adam_step(OptimizerState& state, ParameterStore& store, int epoch);

}  // namespace sfr::nn
