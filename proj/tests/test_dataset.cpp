#include <doctest.h>

#include <cmath>
#include <set>

#include "hystop/dataset.hpp"
#include "hystop/error.hpp"
#include "hystop/metrics.hpp"

using namespace hystop;

namespace {
constexpr double kPi = 3.14159265358979323846;

// lightweight stand-in loops: phase-lagged sinusoids are enough for the
// bookkeeping these tests cover
LoopRecord fake_loop(double freq, double b_peak, int n = 500, double h_peak = 200.0) {
    LoopRecord rec;
    rec.freq = freq;
    rec.b_peak = b_peak;
    rec.b.resize(static_cast<size_t>(n));
    rec.h.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * i / n;
        rec.b[static_cast<size_t>(i)] = b_peak * std::sin(a);
        rec.h[static_cast<size_t>(i)] = h_peak * (b_peak / 1.7) * std::sin(a + 0.5);
    }
    return rec;
}

std::vector<LoopRecord> fake_corpus() {
    std::vector<LoopRecord> loops;
    for (double f : {5.0, 10.0, 25.0, 50.0, 100.0, 200.0, 400.0, 800.0, 1000.0})
        for (double bp : {1.0, 1.3, 1.5, 1.7}) loops.push_back(fake_loop(f, bp));
    return loops;
}
} // namespace

TEST_CASE("max-abs scales come from the corpus extrema") {
    auto loops = fake_corpus();
    NormalizedDataset ds = normalize(loops);
    CHECK(ds.scale.h_scale == doctest::Approx(200.0).epsilon(1e-4));
    CHECK(ds.scale.b_scale == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(ds.t_scale_s == doctest::Approx(0.2));   // 1/5 Hz
    CHECK(ds.f_scale_hz == doctest::Approx(1000.0));
    double peak = 0.0;
    for (double v : ds.b.data) peak = std::max(peak, std::abs(v));
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalize/denormalize is an exact inverse pair") {
    auto loops = fake_corpus();
    NormalizedDataset ds = normalize(loops);
    const int len = ds.length;
    for (int s : {0, 7, 35}) {
        for (int i = 0; i < len; ++i) {
            const double b = denormalize_b(ds.scale, ds.b.data[static_cast<size_t>(s * len + i)]);
            const double h = denormalize_h(ds.scale, ds.h.data[static_cast<size_t>(s * len + i)]);
            const double b_ref = loops[static_cast<size_t>(s)].b[static_cast<size_t>(i)];
            const double h_ref = loops[static_cast<size_t>(s)].h[static_cast<size_t>(i)];
            CHECK(std::abs(b - b_ref) <= 1e-12 * std::max(1.0, std::abs(b_ref)));
            CHECK(std::abs(h - h_ref) <= 1e-12 * std::max(1.0, std::abs(h_ref)));
        }
    }
}

TEST_CASE("scales restricted to a train mask flag out-of-scale test samples") {
    auto loops = fake_corpus();
    // mask out every 1.7 T loop: those samples then exceed |1|
    std::vector<int> mask;
    for (int i = 0; i < 36; ++i)
        if (loops[static_cast<size_t>(i)].b_peak < 1.6) mask.push_back(i);
    NormalizedDataset ds = normalize(loops, mask);
    CHECK(ds.scale.b_scale == doctest::Approx(1.5).epsilon(1e-12));
    int flagged = 0;
    for (const SampleMeta& m : ds.meta) flagged += m.out_of_scale ? 1 : 0;
    CHECK(flagged == 9); // one per frequency
}

TEST_CASE("empty corpus and all-zero channels are rejected") {
    CHECK_THROWS_AS(normalize({}), Error);
    LoopRecord zero = fake_loop(50.0, 1.0);
    std::fill(zero.h.begin(), zero.h.end(), 0.0);
    CHECK_THROWS_AS(normalize({zero}), Error);
}

TEST_CASE("fno assembly shapes and time channel") {
    auto loops = fake_corpus();
    NormalizedDataset ds = normalize(loops);
    FnoTensors t = assemble_fno(ds);
    CHECK(t.inputs.shape == std::vector<int>{36, 2, 500});
    CHECK(t.targets.shape == std::vector<int>{36, 500});

    // slowest loop (5 Hz) spans its full 0.2 s period: scaled time reaches
    // (L-1)/L; faster loops stay proportionally below
    const int len = 500;
    auto t_at = [&](int s, int i) {
        return t.inputs.data[static_cast<size_t>((s * 2 + 1) * len + i)];
    };
    CHECK(t_at(0, 0) == 0.0);
    CHECK(t_at(0, len - 1) == doctest::Approx((len - 1.0) / len).epsilon(1e-12));
    // the 1000 Hz loop occupies 5/1000 of the scale
    CHECK(t_at(32, len - 1) == doctest::Approx((len - 1.0) / len * 5.0 / 1000.0).epsilon(1e-12));

    // same freq, different B: identical t channels
    ExcitationSpec ignored;
    (void)ignored;
    LoopRecord l1 = fake_loop(50.0, 1.0);
    LoopRecord l2 = fake_loop(50.0, 1.5);
    NormalizedDataset pair = normalize({l1, l2});
    FnoTensors tp = assemble_fno(pair);
    for (int i = 0; i < 500; ++i) {
        CHECK(tp.inputs.data[static_cast<size_t>(500 + i)] ==
              tp.inputs.data[static_cast<size_t>(3 * 500 + i)]);
    }
}

TEST_CASE("deeponet assembly appends the normalized frequency") {
    auto loops = fake_corpus();
    NormalizedDataset ds = normalize(loops);
    DeepOnetTensors t = assemble_deeponet(ds);
    CHECK(t.branch.shape == std::vector<int>{36, 501});
    CHECK(t.trunk.shape == std::vector<int>{500, 1});
    CHECK(t.targets.shape == std::vector<int>{36, 500});
    // per-period trunk time in [0, 1)
    CHECK(t.trunk.data[0] == 0.0);
    CHECK(t.trunk.data[499] == doctest::Approx(499.0 / 500));
    // last grid row is the 1000 Hz, 1.7 T loop: appended f = 1.0
    CHECK(t.branch.data[static_cast<size_t>(35 * 501 + 500)] == doctest::Approx(1.0));
    // 5 Hz rows carry 5/1000
    CHECK(t.branch.data[500] == doctest::Approx(5.0 / 1000.0));
}

TEST_CASE("cyclic rolling multiplies the corpus by the shift count") {
    auto loops = fake_corpus();
    NormalizedDataset ds = normalize(loops);
    NormalizedDataset rolled = cyclic_roll(ds, 10);
    CHECK(rolled.count() == 360);
    CHECK(rolled.length == 500);

    // k = 0 is the identity row
    for (int i = 0; i < 500; ++i) {
        CHECK(rolled.b.data[static_cast<size_t>(i)] == ds.b.data[static_cast<size_t>(i)]);
        CHECK(rolled.h.data[static_cast<size_t>(i)] == ds.h.data[static_cast<size_t>(i)]);
    }

    // provenance records the shift in samples
    CHECK(rolled.meta[0].shift == 0);
    CHECK(rolled.meta[3].shift == 150);
    CHECK(rolled.meta[3].source_index == 0);

    // the (B, H) point set of each sample is preserved
    std::multiset<std::pair<double, double>> orig, after;
    for (int i = 0; i < 500; ++i) {
        orig.emplace(ds.b.data[static_cast<size_t>(i)], ds.h.data[static_cast<size_t>(i)]);
        after.emplace(rolled.b.data[static_cast<size_t>(7 * 500 + i)],
                      rolled.h.data[static_cast<size_t>(7 * 500 + i)]);
    }
    CHECK(orig == after);

    // rolling by k then by n_shifts - k restores the original series
    NormalizedDataset one = normalize({fake_loop(50.0, 1.0)});
    NormalizedDataset r1 = cyclic_roll(one, 10);
    // row k=3, roll further by 7 -> identity
    const int len = 500;
    std::vector<double> twice(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i)
        twice[static_cast<size_t>(i)] = r1.b.data[static_cast<size_t>(3 * len + (i + 350) % len)];
    for (int i = 0; i < len; ++i)
        CHECK(twice[static_cast<size_t>(i)] == one.b.data[static_cast<size_t>(i)]);

    CHECK_THROWS_AS(cyclic_roll(one, 7), Error); // 500 % 7 != 0
}

TEST_CASE("rolling keeps loop areas invariant") {
    NormalizedDataset ds = normalize({fake_loop(50.0, 1.5)});
    NormalizedDataset rolled = cyclic_roll(ds, 10);
    std::vector<double> b0(ds.b.data.begin(), ds.b.data.begin() + 500);
    std::vector<double> h0(ds.h.data.begin(), ds.h.data.begin() + 500);
    const double p0 = core_loss(b0, h0, 50.0);
    for (int k = 0; k < 10; ++k) {
        std::vector<double> bk(rolled.b.data.begin() + k * 500,
                               rolled.b.data.begin() + (k + 1) * 500);
        std::vector<double> hk(rolled.h.data.begin() + k * 500,
                               rolled.h.data.begin() + (k + 1) * 500);
        CHECK(std::abs(core_loss(bk, hk, 50.0) - p0) / std::abs(p0) < 1e-9);
    }
}

TEST_CASE("gaussian augmentation doubles the set and keeps targets bit-identical") {
    auto loops = fake_corpus();
    NormalizedDataset rolled = cyclic_roll(normalize(loops), 10);
    NormalizedDataset aug = gaussian_augment(rolled, 0.0, 0.05, 99);
    REQUIRE(aug.count() == 720);

    // targets of the noisy half match the originals exactly
    for (size_t i = 0; i < rolled.h.data.size(); ++i) {
        CHECK(aug.h.data[i] == rolled.h.data[i]);
        CHECK(aug.h.data[rolled.h.data.size() + i] == rolled.h.data[i]);
    }
    for (int s = 0; s < 360; ++s) {
        CHECK(aug.meta[static_cast<size_t>(s)].noisy == false);
        CHECK(aug.meta[static_cast<size_t>(360 + s)].noisy == true);
    }

    // empirical noise statistics within 3-sigma bands
    double sum = 0.0, sq = 0.0;
    const size_t n_elem = rolled.b.data.size();
    for (size_t i = 0; i < n_elem; ++i) {
        const double d = aug.b.data[n_elem + i] - rolled.b.data[i];
        sum += d;
        sq += d * d;
    }
    const double mean = sum / static_cast<double>(n_elem);
    const double sd = std::sqrt(sq / static_cast<double>(n_elem) - mean * mean);
    CHECK(std::abs(sd - 0.05) < 3.0 * 0.05 / std::sqrt(static_cast<double>(n_elem)));
    CHECK(std::abs(mean) < 3.0 * 0.05 / std::sqrt(static_cast<double>(n_elem)));

    // sigma = 0 duplicates exactly
    NormalizedDataset dup = gaussian_augment(rolled, 0.0, 0.0, 99);
    bool all_equal = true;
    for (size_t i = 0; i < n_elem; ++i) all_equal &= dup.b.data[n_elem + i] == rolled.b.data[i];
    CHECK(all_equal);

    CHECK_THROWS_AS(gaussian_augment(rolled, 0.0, -0.1, 99), Error);
}

TEST_CASE("split counts follow the reported experiment shapes") {
    auto loops = fake_corpus();
    NormalizedDataset ds = normalize(loops);

    SplitSpec paper36{0.9, 0.0, 0.1, 7};
    SplitResult parts = split(ds, paper36);
    CHECK(parts.train.count() == 32);
    CHECK(parts.val.count() == 0);
    CHECK(parts.test.count() == 4);

    NormalizedDataset rolled = cyclic_roll(ds, 10);
    SplitSpec aug{0.8, 0.1, 0.1, 7};
    SplitResult parts2 = split(rolled, aug);
    CHECK(parts2.train.count() == 288);
    CHECK(parts2.val.count() == 36);
    CHECK(parts2.test.count() == 36);

    // disjoint and exhaustive over (source, shift) identity
    std::set<std::pair<int, int>> seen;
    for (const auto* part : {&parts2.train, &parts2.val, &parts2.test})
        for (const SampleMeta& m : part->meta) CHECK(seen.emplace(m.source_index, m.shift).second);
    CHECK(seen.size() == 360);

    // identical seeds give identical partitions
    SplitResult again = split(rolled, aug);
    CHECK(again.train.b.data == parts2.train.b.data);
    CHECK(again.test.b.data == parts2.test.b.data);

    SplitSpec bad{0.5, 0.4, 0.2, 1};
    CHECK_THROWS_AS(split(ds, bad), Error); // ratios beyond 1
    NormalizedDataset two = normalize({fake_loop(5.0, 1.0), fake_loop(10.0, 1.0)});
    SplitSpec squeeze{0.9, 0.05, 0.05, 1};
    CHECK_THROWS_AS(split(two, squeeze), Error); // a requested part comes out empty
}

TEST_CASE("split order is reproducible and drives normalization masks") {
    auto o1 = split_order(36, 123);
    auto o2 = split_order(36, 123);
    CHECK(o1 == o2);
    auto o3 = split_order(36, 124);
    CHECK(o1 != o3);
    std::set<int> unique(o1.begin(), o1.end());
    CHECK(unique.size() == 36);
}
