#include "hystop/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hystop/error.hpp"
#include "hystop/rng.hpp"

namespace hystop {

void SplitSpec::validate() const {
    if (train < 0.0 || val < 0.0 || test < 0.0)
        raise(ErrorKind::Config, "split: ratios must be non-negative");
    if (std::abs(train + val + test - 1.0) > 1e-9)
        raise(ErrorKind::Config, "split: ratios must sum to 1");
}

NormalizedDataset normalize(const std::vector<LoopRecord>& loops,
                            const std::vector<int>& train_mask) {
    if (loops.empty()) raise(ErrorKind::Config, "normalize: empty corpus");
    const int n = static_cast<int>(loops.size());
    const int len = static_cast<int>(loops[0].b.size());
    for (const LoopRecord& rec : loops)
        if (static_cast<int>(rec.b.size()) != len || rec.h.size() != rec.b.size())
            raise(ErrorKind::Input, "normalize: ragged loop lengths");

    std::vector<int> scale_source = train_mask;
    if (scale_source.empty()) {
        scale_source.resize(static_cast<size_t>(n));
        std::iota(scale_source.begin(), scale_source.end(), 0);
    }
    double b_max = 0.0, h_max = 0.0;
    for (int idx : scale_source) {
        if (idx < 0 || idx >= n) raise(ErrorKind::Config, "normalize: mask index out of range");
        const LoopRecord& rec = loops[static_cast<size_t>(idx)];
        for (double v : rec.b) b_max = std::max(b_max, std::abs(v));
        for (double v : rec.h) h_max = std::max(h_max, std::abs(v));
    }
    if (b_max == 0.0 || h_max == 0.0)
        raise(ErrorKind::Config, "normalize: all-zero channel in the scale source");

    NormalizedDataset ds;
    ds.length = len;
    ds.scale = NormScale{b_max, h_max, "max_abs"};
    ds.b = Tensor({n, len});
    ds.h = Tensor({n, len});
    ds.meta.resize(static_cast<size_t>(n));
    double t_max = 0.0, f_max = 0.0;
    for (int s = 0; s < n; ++s) {
        const LoopRecord& rec = loops[static_cast<size_t>(s)];
        t_max = std::max(t_max, 1.0 / rec.freq);
        f_max = std::max(f_max, rec.freq);
        double peak = 0.0;
        for (int i = 0; i < len; ++i) {
            const double bn = rec.b[static_cast<size_t>(i)] / b_max;
            const double hn = rec.h[static_cast<size_t>(i)] / h_max;
            ds.b.data[static_cast<size_t>(s * len + i)] = bn;
            ds.h.data[static_cast<size_t>(s * len + i)] = hn;
            peak = std::max({peak, std::abs(bn), std::abs(hn)});
        }
        SampleMeta& m = ds.meta[static_cast<size_t>(s)];
        m.freq = rec.freq;
        m.b_peak = rec.b_peak;
        m.source_index = s;
        m.out_of_scale = peak > 1.0 + 1e-12;
    }
    ds.t_scale_s = t_max;
    ds.f_scale_hz = f_max;
    return ds;
}

NormalizedDataset normalize_with(const std::vector<LoopRecord>& loops, const NormScale& scale,
                                 double t_scale_s, double f_scale_hz,
                                 const std::vector<SampleMeta>& meta) {
    if (loops.empty()) raise(ErrorKind::Config, "normalize: empty corpus");
    if (!(scale.b_scale > 0.0) || !(scale.h_scale > 0.0))
        raise(ErrorKind::Config, "normalize: scales must be positive");
    if (!meta.empty() && meta.size() != loops.size())
        raise(ErrorKind::Input, "normalize: provenance count does not match loop count");
    const int n = static_cast<int>(loops.size());
    const int len = static_cast<int>(loops[0].b.size());
    for (const LoopRecord& rec : loops)
        if (static_cast<int>(rec.b.size()) != len || rec.h.size() != rec.b.size())
            raise(ErrorKind::Input, "normalize: ragged loop lengths");
    NormalizedDataset ds;
    ds.length = len;
    ds.scale = scale;
    ds.t_scale_s = t_scale_s;
    ds.f_scale_hz = f_scale_hz;
    ds.b = Tensor({n, len});
    ds.h = Tensor({n, len});
    ds.meta.resize(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s) {
        const LoopRecord& rec = loops[static_cast<size_t>(s)];
        double peak = 0.0;
        for (int i = 0; i < len; ++i) {
            const double bn = rec.b[static_cast<size_t>(i)] / scale.b_scale;
            const double hn = rec.h[static_cast<size_t>(i)] / scale.h_scale;
            ds.b.data[static_cast<size_t>(s * len + i)] = bn;
            ds.h.data[static_cast<size_t>(s * len + i)] = hn;
            peak = std::max({peak, std::abs(bn), std::abs(hn)});
        }
        SampleMeta m;
        if (!meta.empty()) {
            m = meta[static_cast<size_t>(s)];
        } else {
            m.freq = rec.freq;
            m.b_peak = rec.b_peak;
            m.source_index = s;
        }
        m.out_of_scale = peak > 1.0 + 1e-12;
        ds.meta[static_cast<size_t>(s)] = m;
    }
    return ds;
}

std::vector<int> split_order(int n, uint64_t seed) {
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<uint64_t>(i) + 1));
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    return order;
}

double denormalize_b(const NormScale& scale, double b_normalized) {
    return b_normalized * scale.b_scale;
}

double denormalize_h(const NormScale& scale, double h_normalized) {
    return h_normalized * scale.h_scale;
}

FnoTensors assemble_fno(const NormalizedDataset& ds) {
    const int n = ds.count();
    const int len = ds.length;
    FnoTensors out;
    out.inputs = Tensor({n, 2, len});
    out.targets = ds.h;
    for (int s = 0; s < n; ++s) {
        const double freq = ds.meta[static_cast<size_t>(s)].freq;
        double* in = out.inputs.data.data() + static_cast<ptrdiff_t>(s) * 2 * len;
        std::copy_n(ds.b.data.data() + static_cast<ptrdiff_t>(s) * len, len, in);
        // absolute time keeps the frequency identifiable across samples
        for (int i = 0; i < len; ++i)
            in[len + i] = static_cast<double>(i) / (freq * len) / ds.t_scale_s;
    }
    return out;
}

DeepOnetTensors assemble_deeponet(const NormalizedDataset& ds) {
    const int n = ds.count();
    const int len = ds.length;
    DeepOnetTensors out;
    out.branch = Tensor({n, len + 1});
    out.trunk = Tensor({len, 1});
    out.targets = ds.h;
    for (int i = 0; i < len; ++i)
        out.trunk.data[static_cast<size_t>(i)] = static_cast<double>(i) / len;
    for (int s = 0; s < n; ++s) {
        double* row = out.branch.data.data() + static_cast<ptrdiff_t>(s) * (len + 1);
        std::copy_n(ds.b.data.data() + static_cast<ptrdiff_t>(s) * len, len, row);
        row[len] = ds.meta[static_cast<size_t>(s)].freq / ds.f_scale_hz;
    }
    return out;
}

NormalizedDataset cyclic_roll(const NormalizedDataset& ds, int n_shifts) {
    if (n_shifts < 1) raise(ErrorKind::Config, "cyclic_roll: n_shifts must be >= 1");
    if (ds.length % n_shifts != 0)
        raise(ErrorKind::Config, "cyclic_roll: length " + std::to_string(ds.length) +
                                     " not divisible by " + std::to_string(n_shifts) + " shifts");
    const int step = ds.length / n_shifts;
    const int n = ds.count();
    const int len = ds.length;
    NormalizedDataset out;
    out.length = len;
    out.scale = ds.scale;
    out.t_scale_s = ds.t_scale_s;
    out.f_scale_hz = ds.f_scale_hz;
    out.b = Tensor({n * n_shifts, len});
    out.h = Tensor({n * n_shifts, len});
    out.meta.resize(static_cast<size_t>(n) * n_shifts);
    for (int s = 0; s < n; ++s) {
        const double* src_b = ds.b.data.data() + static_cast<ptrdiff_t>(s) * len;
        const double* src_h = ds.h.data.data() + static_cast<ptrdiff_t>(s) * len;
        for (int k = 0; k < n_shifts; ++k) {
            const int row = s * n_shifts + k;
            const int roll = k * step;
            double* dst_b = out.b.data.data() + static_cast<ptrdiff_t>(row) * len;
            double* dst_h = out.h.data.data() + static_cast<ptrdiff_t>(row) * len;
            for (int i = 0; i < len; ++i) {
                const int j = (i + roll) % len;
                dst_b[i] = src_b[j];
                dst_h[i] = src_h[j];
            }
            SampleMeta m = ds.meta[static_cast<size_t>(s)];
            m.shift = (m.shift + roll) % len;
            out.meta[static_cast<size_t>(row)] = m;
        }
    }
    return out;
}

NormalizedDataset gaussian_augment(const NormalizedDataset& ds, double mu, double sigma,
                                   uint64_t seed) {
    if (sigma < 0.0) raise(ErrorKind::Config, "gaussian_augment: sigma must be >= 0");
    const int n = ds.count();
    const int len = ds.length;
    NormalizedDataset out;
    out.length = len;
    out.scale = ds.scale;
    out.t_scale_s = ds.t_scale_s;
    out.f_scale_hz = ds.f_scale_hz;
    out.b = Tensor({2 * n, len});
    out.h = Tensor({2 * n, len});
    out.meta.resize(static_cast<size_t>(2 * n));
    std::copy(ds.b.data.begin(), ds.b.data.end(), out.b.data.begin());
    std::copy(ds.h.data.begin(), ds.h.data.end(), out.h.data.begin());
    std::copy(ds.meta.begin(), ds.meta.end(), out.meta.begin());
    Rng rng(seed);
    for (int s = 0; s < n; ++s) {
        const double* src_b = ds.b.data.data() + static_cast<ptrdiff_t>(s) * len;
        double* dst_b = out.b.data.data() + static_cast<ptrdiff_t>(n + s) * len;
        for (int i = 0; i < len; ++i) dst_b[i] = src_b[i] + rng.gaussian(mu, sigma);
        // targets stay bit-identical
        std::copy_n(ds.h.data.data() + static_cast<ptrdiff_t>(s) * len, len,
                    out.h.data.data() + static_cast<ptrdiff_t>(n + s) * len);
        SampleMeta m = ds.meta[static_cast<size_t>(s)];
        m.noisy = true;
        out.meta[static_cast<size_t>(n + s)] = m;
    }
    return out;
}

namespace {

NormalizedDataset take_rows(const NormalizedDataset& ds, const std::vector<int>& rows) {
    NormalizedDataset out;
    out.length = ds.length;
    out.scale = ds.scale;
    out.t_scale_s = ds.t_scale_s;
    out.f_scale_hz = ds.f_scale_hz;
    const int len = ds.length;
    out.b = Tensor({static_cast<int>(rows.size()), len});
    out.h = Tensor({static_cast<int>(rows.size()), len});
    out.meta.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        const int r = rows[i];
        std::copy_n(ds.b.data.data() + static_cast<ptrdiff_t>(r) * len, len,
                    out.b.data.data() + static_cast<ptrdiff_t>(i) * len);
        std::copy_n(ds.h.data.data() + static_cast<ptrdiff_t>(r) * len, len,
                    out.h.data.data() + static_cast<ptrdiff_t>(i) * len);
        out.meta.push_back(ds.meta[static_cast<size_t>(r)]);
    }
    return out;
}

} // namespace

SplitResult split(const NormalizedDataset& ds, const SplitSpec& spec) {
    spec.validate();
    const int n = ds.count();
    const int parts = (spec.train > 0.0) + (spec.val > 0.0) + (spec.test > 0.0);
    if (n < parts) raise(ErrorKind::Config, "split: fewer samples than parts");

    std::vector<int> order = split_order(n, spec.seed);

    // floor counts for train and val; the last part absorbs the remainder
    // (36 at 9:1 -> 32 train / 4 test)
    const int n_train = static_cast<int>(std::floor(spec.train * n));
    const int n_val = static_cast<int>(std::floor(spec.val * n));
    const int n_test = n - n_train - n_val;
    if ((spec.train > 0.0 && n_train == 0) || (spec.val > 0.0 && n_val == 0) ||
        (spec.test > 0.0 && n_test == 0))
        raise(ErrorKind::Config, "split: a requested part came out empty");

    std::vector<int> train_rows(order.begin(), order.begin() + n_train);
    std::vector<int> val_rows(order.begin() + n_train, order.begin() + n_train + n_val);
    std::vector<int> test_rows(order.begin() + n_train + n_val, order.end());
    SplitResult out;
    out.train = take_rows(ds, train_rows);
    out.val = take_rows(ds, val_rows);
    out.test = take_rows(ds, test_rows);
    return out;
}

} // namespace hystop
