#include <doctest.h>

#include <cmath>

#include "hystop/adam.hpp"
#include "hystop/error.hpp"

using namespace hystop;

TEST_CASE("zero gradients leave parameters unchanged") {
    std::vector<Param> params;
    params.emplace_back("w", Tensor({3}, {1.0, -2.0, 0.5}));
    AdamState state = AdamState::init(params);
    const auto before = params[0].value.data;
    adam_step(params, state);
    CHECK(params[0].value.data == before);
    CHECK(state.step == 1);
}

TEST_CASE("first step magnitude follows the bias-corrected formulas") {
    std::vector<Param> params;
    params.emplace_back("w", Tensor({1}, {0.7}));
    params[0].grad.data[0] = 1.0;
    AdamState state = AdamState::init(params, 1e-3);
    adam_step(params, state);
    // m_hat = v_hat = 1 after one unit-gradient step, update = lr/(1+eps)
    const double expected = 0.7 - 1e-3 / (1.0 + 1e-8);
    CHECK(params[0].value.data[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs((0.7 - params[0].value.data[0]) - 1e-3) < 1e-9);
}

TEST_CASE("descends f(w) = w^2 from w=1") {
    std::vector<Param> params;
    params.emplace_back("w", Tensor({1}, {1.0}));
    AdamState state = AdamState::init(params, 1e-3);
    for (int i = 0; i < 100; ++i) {
        params[0].grad.data[0] = 2.0 * params[0].value.data[0];
        adam_step(params, state);
        params[0].zero_grad();
    }
    CHECK(std::abs(params[0].value.data[0]) < 1.0);
    CHECK(state.step == 100);
}

TEST_CASE("moment shape mismatch raises a dimension error") {
    std::vector<Param> params;
    params.emplace_back("w", Tensor({2}, {1.0, 2.0}));
    AdamState state = AdamState::init(params);
    params[0].value = Tensor({3});
    params[0].grad = Tensor({3});
    CHECK_THROWS_AS(adam_step(params, state), Error);
}

TEST_CASE("strictly increasing step counter") {
    std::vector<Param> params;
    params.emplace_back("w", Tensor({1}, {1.0}));
    AdamState state = AdamState::init(params);
    for (int i = 1; i <= 5; ++i) {
        adam_step(params, state);
        CHECK(state.step == i);
    }
}
