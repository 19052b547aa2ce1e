#include <doctest.h>

#include <cmath>

#include "hystop/error.hpp"
#include "hystop/metrics.hpp"

using namespace hystop;

namespace {
constexpr double kPi = 3.14159265358979323846;

// B = Bp sin(wt), H = Hp sin(wt + phi): exact P = f pi Bp Hp sin(phi)
void ellipse(int n, double bp, double hp, double phi, std::vector<double>& b,
             std::vector<double>& h) {
    b.resize(static_cast<size_t>(n));
    h.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * i / n;
        b[static_cast<size_t>(i)] = bp * std::sin(a);
        h[static_cast<size_t>(i)] = hp * std::sin(a + phi);
    }
}
} // namespace

TEST_CASE("analytic ellipse loop at 500 samples") {
    std::vector<double> b, h;
    ellipse(500, 1.0, 100.0, kPi / 6.0, b, h);
    const double expected = 50.0 * kPi * 1.0 * 100.0 * 0.5;
    const double p = core_loss(b, h, 50.0);
    CHECK(std::abs(p - expected) / expected < 1e-6);
}

TEST_CASE("convergence order of the quadrature is at least 2") {
    const double expected = 50.0 * kPi * 100.0 * std::sin(kPi / 6.0);
    std::vector<double> errs;
    for (int n : {128, 256, 512}) {
        std::vector<double> b, h;
        ellipse(n, 1.0, 100.0, kPi / 6.0, b, h);
        errs.push_back(std::abs(core_loss(b, h, 50.0) - expected));
    }
    const double order1 = std::log2(errs[0] / errs[1]);
    const double order2 = std::log2(errs[1] / errs[2]);
    CHECK(order1 >= 2.0);
    CHECK(order2 >= 2.0);
}

TEST_CASE("zero H means zero loss") {
    std::vector<double> b, h;
    ellipse(500, 1.0, 100.0, kPi / 6.0, b, h);
    std::fill(h.begin(), h.end(), 0.0);
    CHECK(core_loss(b, h, 50.0) == 0.0);
}

TEST_CASE("loss is invariant under the augmentation rolls") {
    std::vector<double> b, h;
    ellipse(500, 1.3, 80.0, 0.4, b, h);
    const double p0 = core_loss(b, h, 100.0);
    for (int k = 1; k < 10; ++k) {
        const int roll = 50 * k; // the cyclic augmentation grid
        std::vector<double> br(500), hr(500);
        for (int i = 0; i < 500; ++i) {
            br[static_cast<size_t>(i)] = b[static_cast<size_t>((i + roll) % 500)];
            hr[static_cast<size_t>(i)] = h[static_cast<size_t>((i + roll) % 500)];
        }
        CHECK(std::abs(core_loss(br, hr, 100.0) - p0) / std::abs(p0) < 1e-9);
    }
}

TEST_CASE("loss scales linearly in H") {
    std::vector<double> b, h, h3;
    ellipse(500, 1.0, 50.0, 0.7, b, h);
    h3 = h;
    for (double& v : h3) v *= 3.0;
    const double p1 = core_loss(b, h, 50.0);
    const double p3 = core_loss(b, h3, 50.0);
    CHECK(std::abs(p3 - 3.0 * p1) / std::abs(p3) < 1e-12);
}

TEST_CASE("negative phase means generative traversal, negative sign") {
    std::vector<double> b, h;
    ellipse(500, 1.0, 100.0, -kPi / 6.0, b, h);
    CHECK(core_loss(b, h, 50.0) < 0.0);
}

TEST_CASE("input validation") {
    std::vector<double> b = {1.0, 2.0};
    std::vector<double> h = {1.0, 2.0};
    CHECK_THROWS_AS(core_loss(b, h, 50.0), Error); // too short
    b = {1.0, 2.0, 3.0, 4.0};
    h = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(core_loss(b, h, 50.0), Error); // length mismatch
    h = {1.0, 2.0, std::nan(""), 4.0};
    CHECK_THROWS_AS(core_loss(b, h, 50.0), Error); // non-finite
}

TEST_CASE("mass-specific conversion") {
    CHECK(to_mass_specific(7650.0, 7650.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(to_mass_specific(1.0, 0.0), Error);
}

TEST_CASE("mre arithmetic") {
    CHECK(mre({100.0}, {100.0}) == 0.0);
    CHECK(mre({100.0}, {90.0}) == doctest::Approx(0.10));
    CHECK(mre({100.0, 200.0}, {110.0, 180.0}) == doctest::Approx(0.10));
    CHECK_THROWS_AS(mre({0.0}, {1.0}), Error);
    CHECK_THROWS_AS(mre({1.0, 2.0}, {1.0}), Error);
    CHECK(mre({-50.0}, {-60.0}) == doctest::Approx(0.20));
}

TEST_CASE("improvement reproduces the reported summary rows") {
    // printed eta values come from unrounded internals; 0.1 percentage
    // point covers the rounding slack
    struct Row {
        double no_aug, aug, printed;
    };
    const Row rows[] = {
        {2.27e-2, 0.97e-3, 95.74}, {2.27e-2, 0.24e-3, 98.95}, {4.90e-2, 3.80e-2, 22.53},
        {4.90e-2, 2.55e-2, 47.96}, {9.60e-2, 6.81e-2, 29.06}, {9.60e-2, 4.29e-2, 55.34},
    };
    for (const Row& r : rows)
        CHECK(std::abs(improvement(r.no_aug, r.aug) - r.printed) < 0.1);
    // the deeponet cyclic row lands on the printed value after 2dp rounding
    CHECK(std::abs(improvement(9.60e-2, 6.81e-2) - 29.06) < 5e-3);
}

TEST_CASE("improvement edge cases") {
    CHECK(improvement(0.5, 0.5) == doctest::Approx(0.0));
    CHECK_THROWS_AS(improvement(0.0, 0.1), Error);
}

TEST_CASE("metrics report JSON carries samples and aggregate") {
    std::vector<MetricSample> samples = {{50.0, 1.0, 100.0, 90.0, 0.10},
                                         {100.0, 1.3, 200.0, 220.0, 0.10}};
    const std::string doc = metrics_report_json(samples, 42.0);
    CHECK(doc.find("\"mre\"") != std::string::npos);
    CHECK(doc.find("\"eta_vs_baseline\"") != std::string::npos);
    CHECK(doc.find("\"P_ref\"") != std::string::npos);
}
