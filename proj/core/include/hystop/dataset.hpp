#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hystop/material.hpp"
#include "hystop/tensor.hpp"

namespace hystop {

/// Max-abs normalization factors. Denormalization is the exact inverse.
struct NormScale {
    double b_scale = 1.0; // tesla
    double h_scale = 1.0; // A/m
    std::string scheme = "max_abs";
};

struct SampleMeta {
    double freq = 0.0;
    double b_peak = 0.0;
    int shift = 0;            // cyclic roll offset in samples
    bool noisy = false;       // GDA copy
    bool out_of_scale = false; // |normalized| exceeded 1 (raw peak above scale source)
    int source_index = 0;     // originating loop in the corpus
};

/// Model-ready normalized loops: row s of b/h is one sample. The corpus
/// scales needed to rebuild SI units (and the time/frequency scales the
/// assemblies use) ride along.
struct NormalizedDataset {
    int length = 0;     // samples per loop
    NormScale scale;
    double t_scale_s = 1.0;  // max period over the corpus
    double f_scale_hz = 1.0; // max frequency over the corpus
    Tensor b; // [N, L]
    Tensor h; // [N, L]
    std::vector<SampleMeta> meta;

    int count() const { return static_cast<int>(meta.size()); }
};

struct SplitSpec {
    double train = 0.9;
    double val = 0.0;
    double test = 0.1;
    uint64_t seed = 0;

    void validate() const;
};

struct SplitResult {
    NormalizedDataset train;
    NormalizedDataset val;
    NormalizedDataset test;
};

struct FnoTensors {
    Tensor inputs;  // [N, 2, L]: channel 0 normalized B, channel 1 scaled absolute time
    Tensor targets; // [N, L]
};

struct DeepOnetTensors {
    Tensor branch;  // [N, L+1]: normalized B with normalized frequency appended
    Tensor trunk;   // [L, 1]: per-period time t/T in [0, 1)
    Tensor targets; // [N, L]
};

/// Max-abs scales from the loops selected by train_mask (all loops when the
/// mask is empty), applied to every loop. Samples whose normalized peak
/// exceeds 1 are flagged in their provenance.
NormalizedDataset normalize(const std::vector<LoopRecord>& loops,
                            const std::vector<int>& train_mask = {});

/// Applies previously computed scales (e.g. from a dataset manifest) so an
/// augmented archive round-trips bit-exactly; meta entries, when given,
/// carry provenance through (shift/noisy flags survive reload).
NormalizedDataset normalize_with(const std::vector<LoopRecord>& loops, const NormScale& scale,
                                 double t_scale_s, double f_scale_hz,
                                 const std::vector<SampleMeta>& meta = {});

/// The seeded shuffle split() uses; exposed so callers can derive the train
/// rows (and hence normalization masks) before building tensors.
std::vector<int> split_order(int n, uint64_t seed);

double denormalize_b(const NormScale& scale, double b_normalized);
double denormalize_h(const NormScale& scale, double h_normalized);

FnoTensors assemble_fno(const NormalizedDataset& ds);
DeepOnetTensors assemble_deeponet(const NormalizedDataset& ds);

/// Joint cyclic roll of each (B, H) pair by k*L/n_shifts samples for
/// k = 0..n_shifts-1. Time channels are untouched: they index absolute
/// sample position. L must divide evenly.
NormalizedDataset cyclic_roll(const NormalizedDataset& ds, int n_shifts = 10);

/// Appends one noisy-input copy per sample: i.i.d. N(mu, sigma^2) added to
/// the normalized B only, targets bit-identical.
NormalizedDataset gaussian_augment(const NormalizedDataset& ds, double mu, double sigma,
                                   uint64_t seed);

/// Seeded shuffle, then counts by floor with the remainder going to the
/// last (test) part; parts are disjoint and exhaustive.
SplitResult split(const NormalizedDataset& ds, const SplitSpec& spec);

} // namespace hystop
