#include "hystop/gemm.hpp"

#include <cstddef>

namespace hystop {
using std::ptrdiff_t;

// Plain register-blocked loops; -O3 + FMA vectorizes the j loops. Sizes here
// top out around 600x600, not worth a packed micro-kernel.

void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c) {
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<ptrdiff_t>(i) * n;
        const double* ai = a + static_cast<ptrdiff_t>(i) * k;
        int p = 0;
        for (; p + 4 <= k; p += 4) {
            const double a0 = ai[p], a1 = ai[p + 1], a2 = ai[p + 2], a3 = ai[p + 3];
            const double* b0 = b + static_cast<ptrdiff_t>(p) * n;
            const double* b1 = b0 + n;
            const double* b2 = b1 + n;
            const double* b3 = b2 + n;
            for (int j = 0; j < n; ++j)
                ci[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
        }
        for (; p < k; ++p) {
            const double ap = ai[p];
            const double* bp = b + static_cast<ptrdiff_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += ap * bp[j];
        }
    }
}

void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c) {
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<ptrdiff_t>(i) * n;
        int p = 0;
        for (; p + 4 <= k; p += 4) {
            const double a0 = a[static_cast<ptrdiff_t>(p) * m + i];
            const double a1 = a[static_cast<ptrdiff_t>(p + 1) * m + i];
            const double a2 = a[static_cast<ptrdiff_t>(p + 2) * m + i];
            const double a3 = a[static_cast<ptrdiff_t>(p + 3) * m + i];
            const double* b0 = b + static_cast<ptrdiff_t>(p) * n;
            const double* b1 = b0 + n;
            const double* b2 = b1 + n;
            const double* b3 = b2 + n;
            for (int j = 0; j < n; ++j)
                ci[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
        }
        for (; p < k; ++p) {
            const double ap = a[static_cast<ptrdiff_t>(p) * m + i];
            const double* bp = b + static_cast<ptrdiff_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += ap * bp[j];
        }
    }
}

void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<ptrdiff_t>(i) * k;
        double* ci = c + static_cast<ptrdiff_t>(i) * n;
        int j = 0;
        for (; j + 4 <= n; j += 4) {
            const double* b0 = b + static_cast<ptrdiff_t>(j) * k;
            const double* b1 = b0 + k;
            const double* b2 = b1 + k;
            const double* b3 = b2 + k;
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            for (int p = 0; p < k; ++p) {
                const double av = ai[p];
                s0 += av * b0[p];
                s1 += av * b1[p];
                s2 += av * b2[p];
                s3 += av * b3[p];
            }
            ci[j] += s0;
            ci[j + 1] += s1;
            ci[j + 2] += s2;
            ci[j + 3] += s3;
        }
        for (; j < n; ++j) {
            const double* bj = b + static_cast<ptrdiff_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] += acc;
        }
    }
}

} // namespace hystop
