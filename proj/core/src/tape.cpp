#include "hystop/tape.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "hystop/error.hpp"
#include "hystop/fft.hpp"
#include "hystop/gemm.hpp"

namespace hystop {

namespace {

// Activation tensors run hundreds of KB; above glibc's default mmap
// threshold every tape rebuild pays mmap/munmap and page-fault cost.
// Keeping such blocks on the freelist removes that churn.
void tune_allocator_once() {
#if defined(__GLIBC__)
    static const bool done = [] {
        mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
        mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
        return true;
    }();
    (void)done;
#endif
}

// product of all dims except the trailing `trailing` ones
int64_t lead_count(const std::vector<int>& shape, int trailing) {
    int64_t n = 1;
    for (size_t i = 0; i + static_cast<size_t>(trailing) < shape.size(); ++i) n *= shape[i];
    return n;
}

std::vector<int> replace_tail(std::vector<int> shape, int trailing, std::initializer_list<int> tail) {
    shape.resize(shape.size() - static_cast<size_t>(trailing));
    shape.insert(shape.end(), tail);
    return shape;
}

} // namespace

Tape::Tape() { tune_allocator_once(); }

Var Tape::push(Tensor value, bool requires_grad) {
    if (consumed_)
        raise(ErrorKind::Contract, "tape already consumed by backward; run a new forward pass");
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.grad.assign(n.value.data.size(), 0.0);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::node(Var v) {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
        raise(ErrorKind::Contract, "invalid tape handle");
    return nodes_[static_cast<size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
        raise(ErrorKind::Contract, "invalid tape handle");
    return nodes_[static_cast<size_t>(v.id)];
}

Var Tape::constant(Tensor t) { return push(std::move(t), false); }

Var Tape::param(Param& p) {
    Var v = push(p.value, true);
    node(v).bound = &p;
    return v;
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad_of(Var v) const {
    const Node& n = node(v);
    if (!n.requires_grad)
        raise(ErrorKind::Contract, "gradient requested for a non-differentiable node");
    static thread_local Tensor view;
    view.shape = n.value.shape;
    view.data = n.grad;
    return view;
}

// ---------------------------------------------------------------------------
// elementwise / reductions
// ---------------------------------------------------------------------------

Var Tape::add(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "add");
    Tensor out(ta.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] + tb.data[i];
    const bool rg = node(a).requires_grad || node(b).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, a, b, y] {
        const auto& g = node(y).grad;
        if (node(a).requires_grad) {
            auto& da = node(a).grad;
            for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        }
        if (node(b).requires_grad) {
            auto& db = node(b).grad;
            for (size_t i = 0; i < g.size(); ++i) db[i] += g[i];
        }
    };
    return y;
}

Var Tape::sub(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "sub");
    Tensor out(ta.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] - tb.data[i];
    const bool rg = node(a).requires_grad || node(b).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, a, b, y] {
        const auto& g = node(y).grad;
        if (node(a).requires_grad) {
            auto& da = node(a).grad;
            for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        }
        if (node(b).requires_grad) {
            auto& db = node(b).grad;
            for (size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
        }
    };
    return y;
}

Var Tape::mul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "mul");
    Tensor out(ta.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] * tb.data[i];
    const bool rg = node(a).requires_grad || node(b).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, a, b, y] {
        const auto& g = node(y).grad;
        const auto& va = node(a).value.data;
        const auto& vb = node(b).value.data;
        if (node(a).requires_grad) {
            auto& da = node(a).grad;
            for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] * vb[i];
        }
        if (node(b).requires_grad) {
            auto& db = node(b).grad;
            for (size_t i = 0; i < g.size(); ++i) db[i] += g[i] * va[i];
        }
    };
    return y;
}

Var Tape::scale(Var a, double s) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] * s;
    const bool rg = node(a).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, a, y, s] {
        const auto& g = node(y).grad;
        auto& da = node(a).grad;
        for (size_t i = 0; i < g.size(); ++i) da[i] += s * g[i];
    };
    return y;
}

Var Tape::relu(Var a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] > 0.0 ? ta.data[i] : 0.0;
    const bool rg = node(a).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, a, y] {
        const auto& g = node(y).grad;
        const auto& va = node(a).value.data;
        auto& da = node(a).grad;
        for (size_t i = 0; i < g.size(); ++i)
            if (va[i] > 0.0) da[i] += g[i]; // subgradient at 0 is 0
    };
    return y;
}

Var Tape::sum(Var a) {
    const Tensor& ta = value(a);
    double acc = 0.0;
    for (double v : ta.data) acc += v;
    const bool rg = node(a).requires_grad;
    Var y = push(Tensor({1}, {acc}), rg);
    if (rg) node(y).pull = [this, a, y] {
        const double g0 = node(y).grad[0];
        auto& da = node(a).grad;
        for (double& d : da) d += g0;
    };
    return y;
}

Var Tape::square_sum(Var a) {
    const Tensor& ta = value(a);
    double acc = 0.0;
    for (double v : ta.data) acc += v * v;
    const bool rg = node(a).requires_grad;
    Var y = push(Tensor({1}, {acc}), rg);
    if (rg) node(y).pull = [this, a, y] {
        const double g0 = node(y).grad[0];
        const auto& va = node(a).value.data;
        auto& da = node(a).grad;
        for (size_t i = 0; i < da.size(); ++i) da[i] += 2.0 * va[i] * g0;
    };
    return y;
}

Var Tape::sqrt_scalar(Var a) {
    const Tensor& ta = value(a);
    if (ta.numel() != 1) raise(ErrorKind::Contract, "sqrt_scalar expects a scalar tensor");
    if (ta.data[0] < 0.0) raise(ErrorKind::Numeric, "sqrt_scalar of a negative value");
    const double root = std::sqrt(ta.data[0]);
    const bool rg = node(a).requires_grad;
    Var y = push(Tensor({1}, {root}), rg);
    if (rg) node(y).pull = [this, a, y, root] {
        if (root > 0.0) node(a).grad[0] += node(y).grad[0] / (2.0 * root);
    };
    return y;
}

// ---------------------------------------------------------------------------
// dense linear algebra
// ---------------------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.ndim() != 2 || tb.ndim() != 2 || ta.shape[1] != tb.shape[0])
        raise(ErrorKind::Dimension,
              "matmul: incompatible shapes " + shape_str(ta.shape) + " x " + shape_str(tb.shape));
    const int m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
    Tensor out({m, n});
    gemm_nn(m, n, k, ta.data.data(), tb.data.data(), out.data.data());
    const bool rg = node(a).requires_grad || node(b).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, a, b, y, m, n, k] {
        const double* g = node(y).grad.data();
        if (node(a).requires_grad)
            gemm_nt(m, k, n, g, node(b).value.data.data(), node(a).grad.data());
        if (node(b).requires_grad)
            gemm_tn(k, n, m, node(a).value.data.data(), g, node(b).grad.data());
    };
    return y;
}

Var Tape::matmul_nt(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.ndim() != 2 || tb.ndim() != 2 || ta.shape[1] != tb.shape[1])
        raise(ErrorKind::Dimension, "matmul_nt: incompatible shapes " + shape_str(ta.shape) +
                                        " x " + shape_str(tb.shape) + "^T");
    const int m = ta.shape[0], k = ta.shape[1], n = tb.shape[0];
    Tensor out({m, n});
    gemm_nt(m, n, k, ta.data.data(), tb.data.data(), out.data.data());
    const bool rg = node(a).requires_grad || node(b).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, a, b, y, m, n, k] {
        const double* g = node(y).grad.data();
        if (node(a).requires_grad)
            gemm_nn(m, k, n, g, node(b).value.data.data(), node(a).grad.data());
        if (node(b).requires_grad)
            gemm_tn(n, k, m, g, node(a).value.data.data(), node(b).grad.data());
    };
    return y;
}

Var Tape::linear(Var x, Var w, Var b) {
    const Tensor& tx = value(x);
    const Tensor& tw = value(w);
    const Tensor& tb = value(b);
    if (tx.ndim() < 1 || tw.ndim() != 2 || tx.dim(-1) != tw.shape[0])
        raise(ErrorKind::Dimension, "linear: input " + shape_str(tx.shape) +
                                        " incompatible with weight " + shape_str(tw.shape));
    const int d_in = tw.shape[0], d_out = tw.shape[1];
    if (tb.ndim() != 1 || tb.shape[0] != d_out)
        raise(ErrorKind::Dimension, "linear: bias " + shape_str(tb.shape) +
                                        " incompatible with weight " + shape_str(tw.shape));
    const int64_t rows = lead_count(tx.shape, 1);
    Tensor out(replace_tail(tx.shape, 1, {d_out}));
    gemm_nn(static_cast<int>(rows), d_out, d_in, tx.data.data(), tw.data.data(), out.data.data());
    for (int64_t r = 0; r < rows; ++r) {
        double* row = out.data.data() + r * d_out;
        for (int j = 0; j < d_out; ++j) row[j] += tb.data[static_cast<size_t>(j)];
    }
    const bool rg = node(x).requires_grad || node(w).requires_grad || node(b).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, x, w, b, y, rows, d_in, d_out] {
        const double* g = node(y).grad.data();
        if (node(x).requires_grad)
            gemm_nt(static_cast<int>(rows), d_in, d_out, g, node(w).value.data.data(),
                    node(x).grad.data());
        if (node(w).requires_grad)
            gemm_tn(d_in, d_out, static_cast<int>(rows), node(x).value.data.data(), g,
                    node(w).grad.data());
        if (node(b).requires_grad) {
            auto& db = node(b).grad;
            for (int64_t r = 0; r < rows; ++r)
                for (int j = 0; j < d_out; ++j) db[static_cast<size_t>(j)] += g[r * d_out + j];
        }
    };
    return y;
}

Var Tape::channel_mix(Var x, Var w, Var b) {
    const Tensor& tx = value(x);
    const Tensor& tw = value(w);
    const Tensor& tb = value(b);
    if (tx.ndim() < 2 || tw.ndim() != 2 || tx.dim(-2) != tw.shape[1])
        raise(ErrorKind::Dimension, "channel_mix: input " + shape_str(tx.shape) +
                                        " incompatible with weight " + shape_str(tw.shape));
    const int c_in = tw.shape[1], c_out = tw.shape[0];
    if (tb.ndim() != 1 || tb.shape[0] != c_out)
        raise(ErrorKind::Dimension, "channel_mix: bias " + shape_str(tb.shape) +
                                        " incompatible with weight " + shape_str(tw.shape));
    const int len = tx.dim(-1);
    const int64_t batch = lead_count(tx.shape, 2);
    Tensor out(replace_tail(tx.shape, 2, {c_out, len}));
    for (int64_t s = 0; s < batch; ++s) {
        const double* xb = tx.data.data() + s * c_in * len;
        double* yb = out.data.data() + s * c_out * len;
        gemm_nn(c_out, len, c_in, tw.data.data(), xb, yb);
        for (int c = 0; c < c_out; ++c) {
            const double bias = tb.data[static_cast<size_t>(c)];
            double* row = yb + static_cast<ptrdiff_t>(c) * len;
            for (int l = 0; l < len; ++l) row[l] += bias;
        }
    }
    const bool rg = node(x).requires_grad || node(w).requires_grad || node(b).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, x, w, b, y, batch, c_in, c_out, len] {
        for (int64_t s = 0; s < batch; ++s) {
            const double* g = node(y).grad.data() + s * c_out * len;
            if (node(x).requires_grad)
                gemm_tn(c_in, len, c_out, node(w).value.data.data(), g,
                        node(x).grad.data() + s * c_in * len);
            if (node(w).requires_grad)
                gemm_nt(c_out, c_in, len, g, node(x).value.data.data() + s * c_in * len,
                        node(w).grad.data());
            if (node(b).requires_grad) {
                auto& db = node(b).grad;
                for (int c = 0; c < c_out; ++c) {
                    double acc = 0.0;
                    const double* row = g + static_cast<ptrdiff_t>(c) * len;
                    for (int l = 0; l < len; ++l) acc += row[l];
                    db[static_cast<size_t>(c)] += acc;
                }
            }
        }
    };
    return y;
}

// ---------------------------------------------------------------------------
// convolution
// ---------------------------------------------------------------------------

Var Tape::conv1d(Var x, Var w, Var b, int stride, int padding) {
    const Tensor& tx = value(x);
    const Tensor& tw = value(w);
    if (stride < 1 || padding < 0)
        raise(ErrorKind::Config, "conv1d: stride must be >= 1 and padding >= 0");
    if (tx.ndim() < 2 || tw.ndim() != 3 || tx.dim(-2) != tw.shape[1])
        raise(ErrorKind::Dimension, "conv1d: input " + shape_str(tx.shape) +
                                        " incompatible with kernel " + shape_str(tw.shape));
    const int c_out = tw.shape[0], c_in = tw.shape[1], ksz = tw.shape[2];
    const int len = tx.dim(-1);
    if (len + 2 * padding < ksz)
        raise(ErrorKind::Dimension, "conv1d: kernel length " + std::to_string(ksz) +
                                        " exceeds padded input length " +
                                        std::to_string(len + 2 * padding));
    const int l_out = (len + 2 * padding - ksz) / stride + 1;
    const int64_t batch = lead_count(tx.shape, 2);
    const bool has_bias = b.id >= 0;
    if (has_bias) {
        const Tensor& tb = value(b);
        if (tb.ndim() != 1 || tb.shape[0] != c_out)
            raise(ErrorKind::Dimension, "conv1d: bias shape " + shape_str(tb.shape));
    }

    Tensor out(replace_tail(tx.shape, 2, {c_out, l_out}));
    for (int64_t s = 0; s < batch; ++s) {
        const double* xb = tx.data.data() + s * c_in * len;
        double* yb = out.data.data() + s * c_out * l_out;
        for (int co = 0; co < c_out; ++co) {
            double* yr = yb + static_cast<ptrdiff_t>(co) * l_out;
            if (has_bias) {
                const double bias = value(b).data[static_cast<size_t>(co)];
                for (int lo = 0; lo < l_out; ++lo) yr[lo] = bias;
            }
            for (int ci = 0; ci < c_in; ++ci) {
                const double* xr = xb + static_cast<ptrdiff_t>(ci) * len;
                const double* wr = tw.data.data() + (static_cast<ptrdiff_t>(co) * c_in + ci) * ksz;
                for (int k = 0; k < ksz; ++k) {
                    const double wv = wr[k];
                    // valid output range for this tap
                    int lo0 = 0;
                    while (lo0 < l_out && lo0 * stride + k - padding < 0) ++lo0;
                    int lo1 = l_out;
                    while (lo1 > lo0 && (lo1 - 1) * stride + k - padding >= len) --lo1;
                    const double* xs = xr + (static_cast<ptrdiff_t>(lo0) * stride + k - padding);
                    for (int lo = lo0; lo < lo1; ++lo, xs += stride) yr[lo] += wv * *xs;
                }
            }
        }
    }
    const bool rg =
        node(x).requires_grad || node(w).requires_grad || (has_bias && node(b).requires_grad);
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, x, w, b, y, batch, c_in, c_out, ksz, len, l_out, stride, padding,
                            has_bias] {
        const Tensor& tw2 = node(w).value;
        for (int64_t s = 0; s < batch; ++s) {
            const double* g = node(y).grad.data() + s * c_out * l_out;
            const double* xb = node(x).value.data.data() + s * c_in * len;
            for (int co = 0; co < c_out; ++co) {
                const double* gr = g + static_cast<ptrdiff_t>(co) * l_out;
                if (has_bias && node(b).requires_grad) {
                    double acc = 0.0;
                    for (int lo = 0; lo < l_out; ++lo) acc += gr[lo];
                    node(b).grad[static_cast<size_t>(co)] += acc;
                }
                for (int ci = 0; ci < c_in; ++ci) {
                    const ptrdiff_t woff = (static_cast<ptrdiff_t>(co) * c_in + ci) * ksz;
                    for (int k = 0; k < ksz; ++k) {
                        int lo0 = 0;
                        while (lo0 < l_out && lo0 * stride + k - padding < 0) ++lo0;
                        int lo1 = l_out;
                        while (lo1 > lo0 && (lo1 - 1) * stride + k - padding >= len) --lo1;
                        const ptrdiff_t x0 = static_cast<ptrdiff_t>(lo0) * stride + k - padding;
                        if (node(x).requires_grad) {
                            double* dx = node(x).grad.data() + s * c_in * len +
                                         static_cast<ptrdiff_t>(ci) * len + x0;
                            const double wv = tw2.data[static_cast<size_t>(woff + k)];
                            for (int lo = lo0; lo < lo1; ++lo, dx += stride) *dx += wv * gr[lo];
                        }
                        if (node(w).requires_grad) {
                            const double* xs = xb + static_cast<ptrdiff_t>(ci) * len + x0;
                            double acc = 0.0;
                            for (int lo = lo0; lo < lo1; ++lo, xs += stride) acc += *xs * gr[lo];
                            node(w).grad[static_cast<size_t>(woff + k)] += acc;
                        }
                    }
                }
            }
        }
    };
    return y;
}

Var Tape::conv_transpose1d(Var x, Var w, Var b, int stride, int padding) {
    const Tensor& tx = value(x);
    const Tensor& tw = value(w);
    if (stride < 1 || padding < 0)
        raise(ErrorKind::Config, "conv_transpose1d: stride must be >= 1 and padding >= 0");
    if (tx.ndim() < 2 || tw.ndim() != 3 || tx.dim(-2) != tw.shape[0])
        raise(ErrorKind::Dimension, "conv_transpose1d: input " + shape_str(tx.shape) +
                                        " incompatible with kernel " + shape_str(tw.shape));
    const int c_in = tw.shape[0], c_out = tw.shape[1], ksz = tw.shape[2];
    const int len = tx.dim(-1);
    const int l_out = (len - 1) * stride - 2 * padding + ksz;
    if (l_out < 1)
        raise(ErrorKind::Dimension, "conv_transpose1d: output length " + std::to_string(l_out) +
                                        " is not positive");
    const int64_t batch = lead_count(tx.shape, 2);
    const bool has_bias = b.id >= 0;
    if (has_bias) {
        const Tensor& tb = value(b);
        if (tb.ndim() != 1 || tb.shape[0] != c_out)
            raise(ErrorKind::Dimension, "conv_transpose1d: bias shape " + shape_str(tb.shape));
    }

    Tensor out(replace_tail(tx.shape, 2, {c_out, l_out}));
    for (int64_t s = 0; s < batch; ++s) {
        const double* xb = tx.data.data() + s * c_in * len;
        double* yb = out.data.data() + s * c_out * l_out;
        if (has_bias) {
            for (int co = 0; co < c_out; ++co) {
                const double bias = value(b).data[static_cast<size_t>(co)];
                double* yr = yb + static_cast<ptrdiff_t>(co) * l_out;
                for (int lo = 0; lo < l_out; ++lo) yr[lo] = bias;
            }
        }
        for (int ci = 0; ci < c_in; ++ci) {
            const double* xr = xb + static_cast<ptrdiff_t>(ci) * len;
            for (int co = 0; co < c_out; ++co) {
                const double* wr = tw.data.data() + (static_cast<ptrdiff_t>(ci) * c_out + co) * ksz;
                double* yr = yb + static_cast<ptrdiff_t>(co) * l_out;
                for (int li = 0; li < len; ++li) {
                    const double xv = xr[li];
                    const int base = li * stride - padding;
                    for (int k = 0; k < ksz; ++k) {
                        const int lo = base + k;
                        if (lo >= 0 && lo < l_out) yr[lo] += xv * wr[k];
                    }
                }
            }
        }
    }
    const bool rg =
        node(x).requires_grad || node(w).requires_grad || (has_bias && node(b).requires_grad);
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, x, w, b, y, batch, c_in, c_out, ksz, len, l_out, stride, padding,
                            has_bias] {
        const Tensor& tw2 = node(w).value;
        for (int64_t s = 0; s < batch; ++s) {
            const double* g = node(y).grad.data() + s * c_out * l_out;
            const double* xb = node(x).value.data.data() + s * c_in * len;
            if (has_bias && node(b).requires_grad) {
                for (int co = 0; co < c_out; ++co) {
                    const double* gr = g + static_cast<ptrdiff_t>(co) * l_out;
                    double acc = 0.0;
                    for (int lo = 0; lo < l_out; ++lo) acc += gr[lo];
                    node(b).grad[static_cast<size_t>(co)] += acc;
                }
            }
            for (int ci = 0; ci < c_in; ++ci) {
                for (int co = 0; co < c_out; ++co) {
                    const double* gr = g + static_cast<ptrdiff_t>(co) * l_out;
                    const ptrdiff_t woff = (static_cast<ptrdiff_t>(ci) * c_out + co) * ksz;
                    for (int li = 0; li < len; ++li) {
                        const int base = li * stride - padding;
                        double dx_acc = 0.0;
                        for (int k = 0; k < ksz; ++k) {
                            const int lo = base + k;
                            if (lo < 0 || lo >= l_out) continue;
                            const double gv = gr[lo];
                            dx_acc += gv * tw2.data[static_cast<size_t>(woff + k)];
                            if (node(w).requires_grad)
                                node(w).grad[static_cast<size_t>(woff + k)] +=
                                    gv * xb[static_cast<ptrdiff_t>(ci) * len + li];
                        }
                        if (node(x).requires_grad)
                            node(x).grad[s * c_in * len + static_cast<ptrdiff_t>(ci) * len + li] +=
                                dx_acc;
                    }
                }
            }
        }
    };
    return y;
}

// ---------------------------------------------------------------------------
// spectral
// ---------------------------------------------------------------------------

Var Tape::rdft(Var x) {
    const Tensor& tx = value(x);
    if (tx.ndim() < 1 || tx.dim(-1) < 2)
        raise(ErrorKind::Dimension, "rdft: last extent must be >= 2, got " + shape_str(tx.shape));
    const int len = tx.dim(-1);
    const RealDft& plan = rdft_plan(len);
    const int nb = plan.bins();
    const int64_t rows = lead_count(tx.shape, 1);
    Tensor out(replace_tail(tx.shape, 1, {nb, 2}));
    for (int64_t r = 0; r < rows; ++r)
        plan.forward(tx.data.data() + r * len, out.data.data() + r * nb * 2);
    const bool rg = node(x).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, x, y, rows, len, nb] {
        const RealDft& p = rdft_plan(len);
        std::vector<double> tmp(static_cast<size_t>(len));
        for (int64_t r = 0; r < rows; ++r) {
            p.forward_adjoint(node(y).grad.data() + r * nb * 2, tmp.data());
            double* dx = node(x).grad.data() + r * len;
            for (int i = 0; i < len; ++i) dx[i] += tmp[static_cast<size_t>(i)];
        }
    };
    return y;
}

Var Tape::irdft(Var spec, int length) {
    const Tensor& ts = value(spec);
    if (ts.ndim() < 2 || ts.dim(-1) != 2)
        raise(ErrorKind::Dimension, "irdft: expected trailing (re,im) pairs, got " +
                                        shape_str(ts.shape));
    const int nb = ts.dim(-2);
    if (nb != length / 2 + 1)
        raise(ErrorKind::Dimension, "irdft: " + std::to_string(nb) + " bins do not match length " +
                                        std::to_string(length) + " (need " +
                                        std::to_string(length / 2 + 1) + ")");
    const RealDft& plan = rdft_plan(length);
    const int64_t rows = lead_count(ts.shape, 2);
    Tensor out(replace_tail(ts.shape, 2, {length}));
    for (int64_t r = 0; r < rows; ++r)
        plan.inverse(ts.data.data() + r * nb * 2, out.data.data() + r * length);
    const bool rg = node(spec).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, spec, y, rows, length, nb] {
        const RealDft& p = rdft_plan(length);
        std::vector<double> tmp(static_cast<size_t>(nb) * 2);
        for (int64_t r = 0; r < rows; ++r) {
            p.inverse_adjoint(node(y).grad.data() + r * length, tmp.data());
            double* ds = node(spec).grad.data() + r * nb * 2;
            for (int i = 0; i < 2 * nb; ++i) ds[i] += tmp[static_cast<size_t>(i)];
        }
    };
    return y;
}

Var Tape::spectral_matmul(Var spec, Var r, int modes) {
    const Tensor& ts = value(spec);
    const Tensor& tr = value(r);
    if (ts.ndim() < 3 || ts.dim(-1) != 2)
        raise(ErrorKind::Dimension, "spectral_matmul: bad spectrum shape " + shape_str(ts.shape));
    if (tr.ndim() != 4 || tr.shape[3] != 2)
        raise(ErrorKind::Dimension, "spectral_matmul: bad weight shape " + shape_str(tr.shape));
    const int c_out = tr.shape[0], c_in = tr.shape[1];
    const int nb = ts.dim(-2);
    if (tr.shape[2] != modes)
        raise(ErrorKind::Dimension, "spectral_matmul: weight holds " + std::to_string(tr.shape[2]) +
                                        " modes, expected " + std::to_string(modes));
    if (modes < 1 || modes > nb)
        raise(ErrorKind::Config, "spectral_matmul: modes " + std::to_string(modes) +
                                     " out of range for " + std::to_string(nb) + " bins");
    if (ts.dim(-3) != c_in)
        raise(ErrorKind::Dimension, "spectral_matmul: spectrum channels " +
                                        std::to_string(ts.dim(-3)) + " != weight C_in " +
                                        std::to_string(c_in));
    const int64_t batch = lead_count(ts.shape, 3);
    Tensor out(replace_tail(ts.shape, 3, {c_out, nb, 2}));
    const ptrdiff_t srow = static_cast<ptrdiff_t>(nb) * 2;
    for (int64_t s = 0; s < batch; ++s) {
        const double* sb = ts.data.data() + s * c_in * srow;
        double* yb = out.data.data() + s * c_out * srow;
        for (int co = 0; co < c_out; ++co) {
            for (int m = 0; m < modes; ++m) {
                double acc_re = 0.0, acc_im = 0.0;
                const double* rw = tr.data.data() +
                                   ((static_cast<ptrdiff_t>(co) * c_in) * modes + m) * 2;
                for (int ci = 0; ci < c_in; ++ci) {
                    const double xr = sb[ci * srow + 2 * m];
                    const double xi = sb[ci * srow + 2 * m + 1];
                    const double wr = rw[static_cast<ptrdiff_t>(ci) * modes * 2];
                    const double wi = rw[static_cast<ptrdiff_t>(ci) * modes * 2 + 1];
                    acc_re += xr * wr - xi * wi;
                    acc_im += xr * wi + xi * wr;
                }
                yb[co * srow + 2 * m] = acc_re;
                yb[co * srow + 2 * m + 1] = acc_im;
            }
        }
    }
    const bool rg = node(spec).requires_grad || node(r).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, spec, r, y, batch, c_in, c_out, modes, nb, srow] {
        const Tensor& tr2 = node(r).value;
        for (int64_t s = 0; s < batch; ++s) {
            const double* g = node(y).grad.data() + s * c_out * srow;
            const double* sb = node(spec).value.data.data() + s * c_in * srow;
            for (int co = 0; co < c_out; ++co) {
                for (int m = 0; m < modes; ++m) {
                    const double gr = g[co * srow + 2 * m];
                    const double gi = g[co * srow + 2 * m + 1];
                    for (int ci = 0; ci < c_in; ++ci) {
                        const ptrdiff_t widx =
                            ((static_cast<ptrdiff_t>(co) * c_in + ci) * modes + m) * 2;
                        const double wr = tr2.data[static_cast<size_t>(widx)];
                        const double wi = tr2.data[static_cast<size_t>(widx + 1)];
                        if (node(spec).requires_grad) {
                            // conj(R) * g
                            node(spec).grad[static_cast<size_t>(s * c_in * srow + ci * srow + 2 * m)] +=
                                gr * wr + gi * wi;
                            node(spec).grad[static_cast<size_t>(s * c_in * srow + ci * srow + 2 * m + 1)] +=
                                -gr * wi + gi * wr;
                        }
                        if (node(r).requires_grad) {
                            // g * conj(X)
                            const double xr = sb[ci * srow + 2 * m];
                            const double xi = sb[ci * srow + 2 * m + 1];
                            node(r).grad[static_cast<size_t>(widx)] += gr * xr + gi * xi;
                            node(r).grad[static_cast<size_t>(widx + 1)] += -gr * xi + gi * xr;
                        }
                    }
                }
            }
        }
    };
    return y;
}

namespace {

// Trig tables for the mode-truncated real DFT pair, cached per (L, modes).
// forward row pair (2k, 2k+1): (cos, -sin)(2 pi k n / L)  [unnormalized rdft]
// inverse row pair:            (a_k cos, -a_k sin) with a_0 = 1/L,
//                              a_k = 2/L, a_{L/2} = 1/L (hermitian weights)
struct TrigTables {
    std::vector<double> fwd;   // [2*modes, L]
    std::vector<double> fwd_t; // [L, 2*modes]
    std::vector<double> inv;   // [2*modes, L]
    std::vector<double> inv_t; // [L, 2*modes]
};

const TrigTables& trig_tables(int length, int modes) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<const TrigTables>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({length, modes});
    if (it == cache.end()) {
        auto t = std::make_unique<TrigTables>();
        const size_t cells = static_cast<size_t>(2 * modes) * length;
        t->fwd.resize(cells);
        t->fwd_t.resize(cells);
        t->inv.resize(cells);
        t->inv_t.resize(cells);
        for (int k = 0; k < modes; ++k) {
            const bool edge = k == 0 || 2 * k == length;
            const double ak = (edge ? 1.0 : 2.0) / length;
            for (int n = 0; n < length; ++n) {
                const double a = 6.283185307179586476925286766559 * k * n / length;
                const double c = std::cos(a);
                const double s = std::sin(a);
                t->fwd[static_cast<size_t>(2 * k) * length + n] = c;
                t->fwd[static_cast<size_t>(2 * k + 1) * length + n] = -s;
                t->inv[static_cast<size_t>(2 * k) * length + n] = ak * c;
                t->inv[static_cast<size_t>(2 * k + 1) * length + n] = -ak * s;
                t->fwd_t[static_cast<size_t>(n) * 2 * modes + 2 * k] = c;
                t->fwd_t[static_cast<size_t>(n) * 2 * modes + 2 * k + 1] = -s;
                t->inv_t[static_cast<size_t>(n) * 2 * modes + 2 * k] = ak * c;
                t->inv_t[static_cast<size_t>(n) * 2 * modes + 2 * k + 1] = -ak * s;
            }
        }
        it = cache.emplace(std::make_pair(length, modes), std::move(t)).first;
    }
    return *it->second;
}

// y[C_out, 2m] = per-bin complex product of spec [C_in, 2m] with r
void bin_mix_forward(const double* spec, const double* r, double* y, int c_out, int c_in,
                     int modes) {
    for (int co = 0; co < c_out; ++co) {
        for (int m = 0; m < modes; ++m) {
            double acc_re = 0.0, acc_im = 0.0;
            for (int ci = 0; ci < c_in; ++ci) {
                const double xr = spec[ci * 2 * modes + 2 * m];
                const double xi = spec[ci * 2 * modes + 2 * m + 1];
                const double wr = r[((co * c_in + ci) * modes + m) * 2];
                const double wi = r[((co * c_in + ci) * modes + m) * 2 + 1];
                acc_re += xr * wr - xi * wi;
                acc_im += xr * wi + xi * wr;
            }
            y[co * 2 * modes + 2 * m] = acc_re;
            y[co * 2 * modes + 2 * m + 1] = acc_im;
        }
    }
}

} // namespace

Var Tape::spectral_conv_fused(Var x, Var r, int modes) {
    const Tensor& tx = value(x);
    const Tensor& tr = value(r);
    if (tx.ndim() < 2) raise(ErrorKind::Dimension, "spectral_conv: bad input " + shape_str(tx.shape));
    if (tr.ndim() != 4 || tr.shape[3] != 2 || tr.shape[2] != modes)
        raise(ErrorKind::Dimension, "spectral_conv: bad weight shape " + shape_str(tr.shape));
    const int c_out = tr.shape[0], c_in = tr.shape[1];
    const int len = tx.dim(-1);
    const int nb = len / 2 + 1;
    if (modes < 1 || modes > nb)
        raise(ErrorKind::Config, "spectral_conv: modes " + std::to_string(modes) +
                                     " out of range for " + std::to_string(nb) + " bins");
    if (tx.dim(-2) != c_in)
        raise(ErrorKind::Dimension, "spectral_conv: input channels " + std::to_string(tx.dim(-2)) +
                                        " != weight C_in " + std::to_string(c_in));
    const int64_t batch = lead_count(tx.shape, 2);
    const TrigTables& tables = trig_tables(len, modes);
    const int tm = 2 * modes;

    // saved per-batch input spectra, needed for the dR reverse pass
    auto spectra = std::make_shared<std::vector<double>>(
        static_cast<size_t>(batch) * c_in * tm);
    Tensor out(replace_tail(tx.shape, 2, {c_out, len}));
    std::vector<double> mixed(static_cast<size_t>(c_out) * tm);
    for (int64_t s = 0; s < batch; ++s) {
        double* spec = spectra->data() + s * c_in * tm;
        gemm_nn(c_in, tm, len, tx.data.data() + s * c_in * len, tables.fwd_t.data(), spec);
        std::fill(mixed.begin(), mixed.end(), 0.0);
        bin_mix_forward(spec, tr.data.data(), mixed.data(), c_out, c_in, modes);
        gemm_nn(c_out, len, tm, mixed.data(), tables.inv.data(),
                out.data.data() + s * c_out * len);
    }

    const bool rg = node(x).requires_grad || node(r).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, x, r, y, batch, c_in, c_out, modes, len, tm, spectra] {
        const TrigTables& tabs = trig_tables(len, modes);
        const Tensor& tr2 = node(r).value;
        std::vector<double> dmixed(static_cast<size_t>(c_out) * tm);
        std::vector<double> dspec(static_cast<size_t>(c_in) * tm);
        for (int64_t s = 0; s < batch; ++s) {
            const double* g = node(y).grad.data() + s * c_out * len;
            const double* spec = spectra->data() + s * c_in * tm;
            std::fill(dmixed.begin(), dmixed.end(), 0.0);
            gemm_nn(c_out, tm, len, g, tabs.inv_t.data(), dmixed.data());
            if (node(r).requires_grad) {
                double* dr = node(r).grad.data();
                for (int co = 0; co < c_out; ++co) {
                    for (int m = 0; m < modes; ++m) {
                        const double gr = dmixed[co * tm + 2 * m];
                        const double gi = dmixed[co * tm + 2 * m + 1];
                        for (int ci = 0; ci < c_in; ++ci) {
                            const double xr = spec[ci * tm + 2 * m];
                            const double xi = spec[ci * tm + 2 * m + 1];
                            dr[((co * c_in + ci) * modes + m) * 2] += gr * xr + gi * xi;
                            dr[((co * c_in + ci) * modes + m) * 2 + 1] += -gr * xi + gi * xr;
                        }
                    }
                }
            }
            if (node(x).requires_grad) {
                std::fill(dspec.begin(), dspec.end(), 0.0);
                for (int ci = 0; ci < c_in; ++ci) {
                    for (int m = 0; m < modes; ++m) {
                        double acc_re = 0.0, acc_im = 0.0;
                        for (int co = 0; co < c_out; ++co) {
                            const double gr = dmixed[co * tm + 2 * m];
                            const double gi = dmixed[co * tm + 2 * m + 1];
                            const double wr = tr2.data[static_cast<size_t>(
                                ((co * c_in + ci) * modes + m) * 2)];
                            const double wi = tr2.data[static_cast<size_t>(
                                ((co * c_in + ci) * modes + m) * 2 + 1)];
                            acc_re += gr * wr + gi * wi;  // conj(R) * g
                            acc_im += -gr * wi + gi * wr;
                        }
                        dspec[ci * tm + 2 * m] = acc_re;
                        dspec[ci * tm + 2 * m + 1] = acc_im;
                    }
                }
                gemm_nn(c_in, len, tm, dspec.data(), tabs.fwd.data(),
                        node(x).grad.data() + s * c_in * len);
            }
        }
    };
    return y;
}

// ---------------------------------------------------------------------------
// shape plumbing
// ---------------------------------------------------------------------------

Var Tape::concat_channels(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.ndim() < 2 || tb.ndim() != ta.ndim() || ta.dim(-1) != tb.dim(-1))
        raise(ErrorKind::Dimension, "concat_channels: incompatible " + shape_str(ta.shape) +
                                        " vs " + shape_str(tb.shape));
    for (int i = 0; i + 2 < ta.ndim(); ++i)
        if (ta.shape[static_cast<size_t>(i)] != tb.shape[static_cast<size_t>(i)])
            raise(ErrorKind::Dimension, "concat_channels: incompatible " + shape_str(ta.shape) +
                                            " vs " + shape_str(tb.shape));
    const int ca = ta.dim(-2), cb = tb.dim(-2), len = ta.dim(-1);
    const int64_t batch = lead_count(ta.shape, 2);
    Tensor out(replace_tail(ta.shape, 2, {ca + cb, len}));
    for (int64_t s = 0; s < batch; ++s) {
        double* yb = out.data.data() + s * (ca + cb) * len;
        std::copy_n(ta.data.data() + s * ca * len, static_cast<size_t>(ca) * len, yb);
        std::copy_n(tb.data.data() + s * cb * len, static_cast<size_t>(cb) * len,
                    yb + static_cast<ptrdiff_t>(ca) * len);
    }
    const bool rg = node(a).requires_grad || node(b).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, a, b, y, batch, ca, cb, len] {
        for (int64_t s = 0; s < batch; ++s) {
            const double* g = node(y).grad.data() + s * (ca + cb) * len;
            if (node(a).requires_grad) {
                double* da = node(a).grad.data() + s * ca * len;
                for (int64_t i = 0; i < static_cast<int64_t>(ca) * len; ++i) da[i] += g[i];
            }
            if (node(b).requires_grad) {
                double* db = node(b).grad.data() + s * cb * len;
                const double* gb = g + static_cast<ptrdiff_t>(ca) * len;
                for (int64_t i = 0; i < static_cast<int64_t>(cb) * len; ++i) db[i] += gb[i];
            }
        }
    };
    return y;
}

Var Tape::crop_or_pad_tail(Var x, int length) {
    const Tensor& tx = value(x);
    if (tx.ndim() < 1 || length < 1)
        raise(ErrorKind::Dimension, "crop_or_pad_tail: bad target length");
    const int len = tx.dim(-1);
    const int keep = std::min(len, length);
    const int64_t rows = lead_count(tx.shape, 1);
    Tensor out(replace_tail(tx.shape, 1, {length}));
    for (int64_t r = 0; r < rows; ++r)
        std::copy_n(tx.data.data() + r * len, keep, out.data.data() + r * length);
    const bool rg = node(x).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, x, y, rows, len, length, keep] {
        for (int64_t r = 0; r < rows; ++r) {
            const double* g = node(y).grad.data() + r * length;
            double* dx = node(x).grad.data() + r * len;
            for (int i = 0; i < keep; ++i) dx[i] += g[i];
        }
    };
    return y;
}

Var Tape::add_scalar_bias(Var x, Var b) {
    const Tensor& tx = value(x);
    const Tensor& tb = value(b);
    if (tb.numel() != 1) raise(ErrorKind::Dimension, "add_scalar_bias: bias must be a scalar");
    Tensor out(tx.shape);
    const double bias = tb.data[0];
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = tx.data[i] + bias;
    const bool rg = node(x).requires_grad || node(b).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, x, b, y] {
        const auto& g = node(y).grad;
        if (node(x).requires_grad) {
            auto& dx = node(x).grad;
            for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
        }
        if (node(b).requires_grad) {
            double acc = 0.0;
            for (double v : g) acc += v;
            node(b).grad[0] += acc;
        }
    };
    return y;
}

Var Tape::reshape(Var x, std::vector<int> shape) {
    const Tensor& tx = value(x);
    if (shape_numel(shape) != tx.numel())
        raise(ErrorKind::Dimension, "reshape: cannot view " + shape_str(tx.shape) + " as " +
                                        shape_str(shape));
    Tensor out(std::move(shape), tx.data);
    const bool rg = node(x).requires_grad;
    Var y = push(std::move(out), rg);
    if (rg) node(y).pull = [this, x, y] {
        const auto& g = node(y).grad;
        auto& dx = node(x).grad;
        for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    };
    return y;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

void Tape::backward(Var loss, double seed) {
    if (consumed_)
        raise(ErrorKind::Contract, "backward called twice on the same tape");
    Node& ln = node(loss);
    if (ln.value.numel() != 1)
        raise(ErrorKind::Contract, "backward requires a scalar loss, got shape " +
                                       shape_str(ln.value.shape));
    consumed_ = true;
    if (!ln.requires_grad) return; // nothing depends on parameters
    ln.grad[0] = seed;
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (n.pull) n.pull();
        if (n.bound) {
            auto& pg = n.bound->grad.data;
            for (size_t j = 0; j < pg.size(); ++j) pg[j] += n.grad[j];
        }
    }
}

} // namespace hystop
