#pragma once

#include <vector>

namespace hystop {

/// Complex scalar as two doubles. Kernels avoid std::complex so the
/// compiler emits plain mul/add instead of the NaN-checked libcalls.
struct Cx {
    double re = 0.0;
    double im = 0.0;
};

/// Mixed-radix out-of-place complex FFT plan. Handles any length: the
/// length is factored into primes and each prime factor gets a
/// Cooley-Tukey stage (O(p^2) combine for large primes, which only occur
/// in tests). Twiddles are precomputed; execution is thread-safe.
class Fft {
public:
    explicit Fft(int n);

    int size() const { return n_; }

    /// X_k = sum_n x_n e^{-2*pi*i*k*n/N}, unnormalized.
    void forward(const Cx* in, Cx* out) const { exec(in, out, false); }
    /// X_k = sum_n x_n e^{+2*pi*i*k*n/N}, unnormalized.
    void inverse(const Cx* in, Cx* out) const { exec(in, out, true); }

private:
    void exec(const Cx* in, Cx* out, bool inv) const;
    void rec(const Cx* in, Cx* out, int n, int in_stride, int level, bool inv) const;

    int n_;
    std::vector<int> radices_;
    std::vector<Cx> tw_; // e^{-2*pi*i*k/n}, k in [0, n)
};

/// Real-signal DFT pair with the exact adjoints the reverse pass needs.
///
/// forward: unnormalized real DFT, bins 0..floor(L/2); spectrum stored as
/// interleaved (re, im) pairs, 2*bins() doubles.
/// inverse: 1/L-normalized inverse; imaginary parts of the DC bin (and the
/// Nyquist bin for even L) are ignored, i.e. the input is treated as the
/// hermitian half-spectrum it is supposed to be.
///
/// Even lengths run through the half-length packing trick; odd lengths go
/// through a full-length complex transform.
class RealDft {
public:
    explicit RealDft(int length);

    int length() const { return len_; }
    int bins() const { return len_ / 2 + 1; }

    void forward(const double* x, double* spec) const;
    void inverse(const double* spec, double* x) const;

    /// x_cot = J_forward^T * spec_cot  (vector-Jacobian product)
    void forward_adjoint(const double* spec_cot, double* x_cot) const;
    /// spec_cot = J_inverse^T * x_cot
    void inverse_adjoint(const double* x_cot, double* spec_cot) const;

private:
    int len_;
    Fft half_; // length L/2 for even L, else unused length-1 stub
    Fft full_; // length L, odd path only
    std::vector<Cx> pack_tw_; // e^{-2*pi*i*k/L}, k in [0, L/2]
    bool even_;
};

/// Shared, thread-safe plan caches.
const Fft& fft_plan(int n);
const RealDft& rdft_plan(int length);

} // namespace hystop
