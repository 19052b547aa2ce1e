#include "hystop/fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "hystop/error.hpp"

namespace hystop {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<int> factorize(int n) {
    std::vector<int> out;
    for (int p = 2; p * p <= n;) {
        if (n % p == 0) {
            out.push_back(p);
            n /= p;
        } else {
            ++p;
        }
    }
    if (n > 1) out.push_back(n);
    return out;
}

thread_local std::vector<Cx> tl_scratch;

} // namespace

Fft::Fft(int n) : n_(n) {
    if (n < 1) raise(ErrorKind::Dimension, "fft length must be >= 1");
    radices_ = factorize(n);
    tw_.resize(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double a = -kTwoPi * k / n;
        tw_[static_cast<size_t>(k)] = {std::cos(a), std::sin(a)};
    }
}

void Fft::exec(const Cx* in, Cx* out, bool inv) const {
    if (n_ == 1) {
        out[0] = in[0];
        return;
    }
    rec(in, out, n_, 1, 0, inv);
}

void Fft::rec(const Cx* in, Cx* out, int n, int in_stride, int level, bool inv) const {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    if (n <= 5) {
        // direct small DFT: cheaper than recursing to single elements
        const int tws = n_ / n;
        const double sgn = inv ? -1.0 : 1.0;
        for (int k = 0; k < n; ++k) {
            double acc_re = in[0].re;
            double acc_im = in[0].im;
            int idx = 0;
            for (int j = 1; j < n; ++j) {
                idx += k;
                if (idx >= n) idx -= n;
                const Cx w = tw_[static_cast<size_t>(idx) * tws];
                const Cx v = in[static_cast<ptrdiff_t>(j) * in_stride];
                const double wr = w.re, wi = sgn * w.im;
                acc_re += v.re * wr - v.im * wi;
                acc_im += v.re * wi + v.im * wr;
            }
            out[k] = {acc_re, acc_im};
        }
        return;
    }
    const int p = radices_[static_cast<size_t>(level)];
    const int m = n / p;
    for (int r = 0; r < p; ++r)
        rec(in + static_cast<ptrdiff_t>(r) * in_stride, out + static_cast<ptrdiff_t>(r) * m, m,
            in_stride * p, level + 1, inv);

    const int tws = n_ / n;           // twiddle table stride at this depth
    const double sgn = inv ? -1.0 : 1.0; // forward table holds e^{-i...}

    if (p == 2) {
        for (int q = 0; q < m; ++q) {
            const Cx w = tw_[static_cast<size_t>(q) * tws];
            const Cx a = out[q];
            const Cx b = out[m + q];
            const double wr = w.re, wi = sgn * w.im;
            const double tr = b.re * wr - b.im * wi;
            const double ti = b.re * wi + b.im * wr;
            out[q] = {a.re + tr, a.im + ti};
            out[m + q] = {a.re - tr, a.im - ti};
        }
        return;
    }

    Cx stack_tmp[8];
    std::vector<Cx> heap_tmp;
    Cx* tmp = stack_tmp;
    if (p > 8) {
        heap_tmp.resize(static_cast<size_t>(p));
        tmp = heap_tmp.data();
    }
    for (int q = 0; q < m; ++q) {
        for (int r = 0; r < p; ++r) tmp[r] = out[r * m + q];
        for (int s = 0; s < p; ++s) {
            const int step = (q + s * m) % n;
            double acc_re = tmp[0].re;
            double acc_im = tmp[0].im;
            int idx = 0;
            for (int r = 1; r < p; ++r) {
                idx += step;
                if (idx >= n) idx -= n;
                const Cx w = tw_[static_cast<size_t>(idx) * tws];
                const double wr = w.re, wi = sgn * w.im;
                acc_re += tmp[r].re * wr - tmp[r].im * wi;
                acc_im += tmp[r].re * wi + tmp[r].im * wr;
            }
            out[s * m + q] = {acc_re, acc_im};
        }
    }
}

// ---------------------------------------------------------------------------
// RealDft
// ---------------------------------------------------------------------------

RealDft::RealDft(int length)
    : len_(length),
      half_(length >= 2 && length % 2 == 0 ? length / 2 : 1),
      full_(length),
      even_(length % 2 == 0) {
    if (length < 2) raise(ErrorKind::Dimension, "real DFT length must be >= 2");
    if (even_) {
        pack_tw_.resize(static_cast<size_t>(len_ / 2 + 1));
        for (int k = 0; k <= len_ / 2; ++k) {
            const double a = -kTwoPi * k / len_;
            pack_tw_[static_cast<size_t>(k)] = {std::cos(a), std::sin(a)};
        }
    }
}

void RealDft::forward(const double* x, double* spec) const {
    const int nb = bins();
    if (even_) {
        const int m = len_ / 2;
        auto& buf = tl_scratch;
        buf.resize(static_cast<size_t>(2 * m));
        Cx* z = buf.data();
        Cx* zf = buf.data() + m;
        for (int i = 0; i < m; ++i) z[i] = {x[2 * i], x[2 * i + 1]};
        half_.forward(z, zf);
        for (int k = 0; k <= m; ++k) {
            const Cx zk = zf[k % m];
            const Cx zmk = zf[(m - k) % m];
            // even/odd sub-spectra from the packed transform
            const double fe_re = 0.5 * (zk.re + zmk.re);
            const double fe_im = 0.5 * (zk.im - zmk.im);
            const double fo_re = 0.5 * (zk.im + zmk.im);
            const double fo_im = -0.5 * (zk.re - zmk.re);
            const Cx w = pack_tw_[static_cast<size_t>(k)];
            spec[2 * k] = fe_re + fo_re * w.re - fo_im * w.im;
            spec[2 * k + 1] = fe_im + fo_re * w.im + fo_im * w.re;
        }
    } else {
        auto& buf = tl_scratch;
        buf.resize(static_cast<size_t>(2 * len_));
        Cx* z = buf.data();
        Cx* zf = buf.data() + len_;
        for (int i = 0; i < len_; ++i) z[i] = {x[i], 0.0};
        full_.forward(z, zf);
        for (int k = 0; k < nb; ++k) {
            spec[2 * k] = zf[k].re;
            spec[2 * k + 1] = zf[k].im;
        }
    }
}

void RealDft::inverse(const double* spec, double* x) const {
    const int nb = bins();
    if (even_) {
        const int m = len_ / 2;
        auto& buf = tl_scratch;
        buf.resize(static_cast<size_t>(2 * m));
        Cx* z = buf.data();
        Cx* zt = buf.data() + m;
        for (int k = 0; k < m; ++k) {
            // hermitian contract: DC and Nyquist imaginary parts read as 0
            const double xk_re = spec[2 * k];
            const double xk_im = k == 0 ? 0.0 : spec[2 * k + 1];
            const int mk = m - k;
            const double xmk_re = spec[2 * mk];
            const double xmk_im = mk == m ? 0.0 : spec[2 * mk + 1];
            const double fe_re = 0.5 * (xk_re + xmk_re);
            const double fe_im = 0.5 * (xk_im - xmk_im);
            // Fo_k = conj(w^k) * (X_k - conj(X_{m-k})) / 2
            const double d_re = 0.5 * (xk_re - xmk_re);
            const double d_im = 0.5 * (xk_im + xmk_im);
            const Cx w = pack_tw_[static_cast<size_t>(k)];
            const double fo_re = d_re * w.re + d_im * w.im;
            const double fo_im = -d_re * w.im + d_im * w.re;
            z[k] = {fe_re - fo_im, fe_im + fo_re}; // Fe + i*Fo
        }
        half_.inverse(z, zt);
        const double scale = 1.0 / m;
        for (int i = 0; i < m; ++i) {
            x[2 * i] = zt[i].re * scale;
            x[2 * i + 1] = zt[i].im * scale;
        }
    } else {
        auto& buf = tl_scratch;
        buf.resize(static_cast<size_t>(2 * len_));
        Cx* z = buf.data();
        Cx* zt = buf.data() + len_;
        z[0] = {spec[0], 0.0};
        for (int k = 1; k < nb; ++k) {
            z[k] = {spec[2 * k], spec[2 * k + 1]};
            z[len_ - k] = {spec[2 * k], -spec[2 * k + 1]};
        }
        full_.inverse(z, zt);
        const double scale = 1.0 / len_;
        for (int i = 0; i < len_; ++i) x[i] = zt[i].re * scale;
    }
}

void RealDft::forward_adjoint(const double* spec_cot, double* x_cot) const {
    // x_cot_n = sum_k (re_k cos(2pi k n/L) - im_k sin(2pi k n/L))
    //         = L * inverse(spec with interior bins halved); the sin factors
    //           vanish at DC/Nyquist, so the hermitian drop is harmless.
    const int nb = bins();
    std::vector<double> tmp(static_cast<size_t>(2 * nb));
    const int last = even_ ? nb - 1 : nb;
    for (int k = 0; k < nb; ++k) {
        const double s = (k == 0 || k == last) ? 1.0 : 0.5;
        tmp[2 * k] = s * spec_cot[2 * k];
        tmp[2 * k + 1] = s * spec_cot[2 * k + 1];
    }
    inverse(tmp.data(), x_cot);
    for (int i = 0; i < len_; ++i) x_cot[i] *= len_;
}

void RealDft::inverse_adjoint(const double* x_cot, double* spec_cot) const {
    // adjoint of the 1/L-normalized inverse: forward transform scaled by
    // 2/L on interior bins and 1/L on DC/Nyquist, imag zeroed there.
    forward(x_cot, spec_cot);
    const int nb = bins();
    const int last = even_ ? nb - 1 : nb;
    const double inv_l = 1.0 / len_;
    for (int k = 0; k < nb; ++k) {
        const double s = (k == 0 || k == last) ? inv_l : 2.0 * inv_l;
        spec_cot[2 * k] *= s;
        spec_cot[2 * k + 1] *= s;
    }
    spec_cot[1] = 0.0;
    if (even_) spec_cot[2 * (nb - 1) + 1] = 0.0;
}

// ---------------------------------------------------------------------------
// Plan caches
// ---------------------------------------------------------------------------

const Fft& fft_plan(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<const Fft>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<const Fft>(n)).first;
    return *it->second;
}

const RealDft& rdft_plan(int length) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<const RealDft>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(length);
    if (it == cache.end()) it = cache.emplace(length, std::make_unique<const RealDft>(length)).first;
    return *it->second;
}

} // namespace hystop
