#include <doctest.h>

#include <cmath>
#include <vector>

#include "hystop/error.hpp"
#include "hystop/fft.hpp"
#include "hystop/rng.hpp"
#include "support/oracles.hpp"

using namespace hystop;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<double> random_signal(int n, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(static_cast<size_t>(n));
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    return x;
}
} // namespace

TEST_CASE("constant signal concentrates in the DC bin") {
    const int n = 500;
    const double c = 1.37;
    std::vector<double> x(n, c);
    const RealDft& plan = rdft_plan(n);
    std::vector<double> spec(static_cast<size_t>(2 * plan.bins()));
    plan.forward(x.data(), spec.data());
    CHECK(spec[0] == doctest::Approx(n * c).epsilon(1e-12));
    CHECK(std::abs(spec[1]) < 1e-9);
    for (int k = 1; k < plan.bins(); ++k) {
        CHECK(std::abs(spec[static_cast<size_t>(2 * k)]) < 1e-9);
        CHECK(std::abs(spec[static_cast<size_t>(2 * k + 1)]) < 1e-9);
    }
}

TEST_CASE("single harmonic lands in its own bin") {
    const int n = 500;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[static_cast<size_t>(i)] = std::cos(2.0 * kPi * 3.0 * i / n);
    const RealDft& plan = rdft_plan(n);
    std::vector<double> spec(static_cast<size_t>(2 * plan.bins()));
    plan.forward(x.data(), spec.data());
    for (int k = 0; k < plan.bins(); ++k) {
        const double re = spec[static_cast<size_t>(2 * k)];
        const double im = spec[static_cast<size_t>(2 * k + 1)];
        if (k == 3) {
            CHECK(re == doctest::Approx(n / 2.0).epsilon(1e-12));
            CHECK(std::abs(im) < 1e-9);
        } else {
            CHECK(std::abs(re) < 1e-9);
            CHECK(std::abs(im) < 1e-9);
        }
    }
}

TEST_CASE("matches the naive DFT oracle across lengths") {
    // mixed radix paths (2,3,5,7), the generic prime fallback, and L=500
    for (int n : {2, 3, 4, 5, 6, 8, 12, 17, 100, 125, 128, 499, 500, 501}) {
        auto x = random_signal(n, 1000 + static_cast<uint64_t>(n));
        const RealDft& plan = rdft_plan(n);
        std::vector<double> spec(static_cast<size_t>(2 * plan.bins()));
        plan.forward(x.data(), spec.data());
        auto ref = oracle::naive_rdft(x);
        double worst = 0.0;
        for (size_t i = 0; i < ref.size(); ++i)
            worst = std::max(worst, std::abs(spec[i] - ref[i]));
        CHECK_MESSAGE(worst < 1e-9, "length ", n, " max abs err ", worst);
    }
}

TEST_CASE("round trip reproduces the signal to 1e-10 relative") {
    for (int n : {10, 125, 500, 501}) {
        auto x = random_signal(n, 77 + static_cast<uint64_t>(n));
        const RealDft& plan = rdft_plan(n);
        std::vector<double> spec(static_cast<size_t>(2 * plan.bins()));
        std::vector<double> back(static_cast<size_t>(n));
        plan.forward(x.data(), spec.data());
        plan.inverse(spec.data(), back.data());
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            num += (back[static_cast<size_t>(i)] - x[static_cast<size_t>(i)]) *
                   (back[static_cast<size_t>(i)] - x[static_cast<size_t>(i)]);
            den += x[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
        }
        CHECK(std::sqrt(num / den) < 1e-10);
    }
}

TEST_CASE("zero spectrum gives the zero signal") {
    const RealDft& plan = rdft_plan(500);
    std::vector<double> spec(static_cast<size_t>(2 * plan.bins()), 0.0);
    std::vector<double> x(500, 1.0);
    plan.inverse(spec.data(), x.data());
    for (double v : x) CHECK(v == 0.0);
}

TEST_CASE("DC-only spectrum of value L gives the constant 1 signal") {
    const int n = 500;
    const RealDft& plan = rdft_plan(n);
    std::vector<double> spec(static_cast<size_t>(2 * plan.bins()), 0.0);
    spec[0] = static_cast<double>(n);
    std::vector<double> x(static_cast<size_t>(n));
    plan.inverse(spec.data(), x.data());
    for (double v : x) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Parseval for even length") {
    const int n = 500;
    auto x = random_signal(n, 5);
    const RealDft& plan = rdft_plan(n);
    std::vector<double> spec(static_cast<size_t>(2 * plan.bins()));
    plan.forward(x.data(), spec.data());
    double time_sum = 0.0;
    for (double v : x) time_sum += v * v;
    auto mag2 = [&](int k) {
        const double re = spec[static_cast<size_t>(2 * k)];
        const double im = spec[static_cast<size_t>(2 * k + 1)];
        return re * re + im * im;
    };
    double freq_sum = mag2(0) + mag2(n / 2);
    for (int k = 1; k < n / 2; ++k) freq_sum += 2.0 * mag2(k);
    freq_sum /= n;
    CHECK(std::abs(freq_sum - time_sum) / time_sum < 1e-9);
}

TEST_CASE("forward and inverse adjoints satisfy the inner-product identity") {
    for (int n : {500, 501}) {
        const RealDft& plan = rdft_plan(n);
        const int nb = plan.bins();
        auto x = random_signal(n, 11);
        auto ybar = random_signal(2 * nb, 12);

        // <rdft(x), ybar> == <x, forward_adjoint(ybar)>
        std::vector<double> spec(static_cast<size_t>(2 * nb));
        plan.forward(x.data(), spec.data());
        double lhs = 0.0;
        for (int i = 0; i < 2 * nb; ++i) lhs += spec[static_cast<size_t>(i)] * ybar[static_cast<size_t>(i)];
        std::vector<double> xadj(static_cast<size_t>(n));
        plan.forward_adjoint(ybar.data(), xadj.data());
        double rhs = 0.0;
        for (int i = 0; i < n; ++i) rhs += x[static_cast<size_t>(i)] * xadj[static_cast<size_t>(i)];
        CHECK(std::abs(lhs - rhs) / std::max(std::abs(lhs), 1.0) < 1e-9);

        // <irdft(s), xbar> == <s, inverse_adjoint(xbar)>
        auto s = random_signal(2 * nb, 13);
        auto xbar = random_signal(n, 14);
        std::vector<double> t(static_cast<size_t>(n));
        plan.inverse(s.data(), t.data());
        double lhs2 = 0.0;
        for (int i = 0; i < n; ++i) lhs2 += t[static_cast<size_t>(i)] * xbar[static_cast<size_t>(i)];
        std::vector<double> sadj(static_cast<size_t>(2 * nb));
        plan.inverse_adjoint(xbar.data(), sadj.data());
        double rhs2 = 0.0;
        for (int i = 0; i < 2 * nb; ++i) rhs2 += s[static_cast<size_t>(i)] * sadj[static_cast<size_t>(i)];
        CHECK(std::abs(lhs2 - rhs2) / std::max(std::abs(lhs2), 1.0) < 1e-9);
    }
}

TEST_CASE("length below 2 is rejected") {
    CHECK_THROWS_AS(RealDft(1), Error);
}
