#pragma once

#include <cstdint>
#include <vector>

#include "hystop/tape.hpp"

namespace hystop {

/// Adam moment state for an ordered parameter list. m/v shapes mirror the
/// parameter shapes; step advances by one per update.
struct AdamState {
    int64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    static AdamState init(const std::vector<Param>& params, double lr = 1e-3);
};

/// Standard bias-corrected Adam update, reading each Param::grad.
void adam_step(std::vector<Param>& params, AdamState& state);

} // namespace hystop
