#include "hystop/adam.hpp"

#include <cmath>

#include "hystop/error.hpp"

namespace hystop {

AdamState AdamState::init(const std::vector<Param>& params, double lr) {
    AdamState s;
    s.lr = lr;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Param& p : params) {
        s.m.emplace_back(p.value.shape);
        s.v.emplace_back(p.value.shape);
    }
    return s;
}

void adam_step(std::vector<Param>& params, AdamState& state) {
    if (state.m.size() != params.size() || state.v.size() != params.size())
        raise(ErrorKind::Dimension, "adam_step: state tracks " + std::to_string(state.m.size()) +
                                        " parameters, got " + std::to_string(params.size()));
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        Param& p = params[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        if (!m.same_shape(p.value))
            raise(ErrorKind::Dimension, "adam_step: moment shape " + shape_str(m.shape) +
                                            " does not match parameter " + p.name + " " +
                                            shape_str(p.value.shape));
        for (size_t j = 0; j < p.value.data.size(); ++j) {
            const double g = p.grad.data[j];
            m.data[j] = state.beta1 * m.data[j] + (1.0 - state.beta1) * g;
            v.data[j] = state.beta2 * v.data[j] + (1.0 - state.beta2) * g * g;
            const double mh = m.data[j] / bc1;
            const double vh = v.data[j] / bc2;
            p.value.data[j] -= state.lr * mh / (std::sqrt(vh) + state.eps);
        }
    }
}

} // namespace hystop
