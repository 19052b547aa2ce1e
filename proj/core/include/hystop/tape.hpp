#pragma once

#include <deque>
#include <functional>
#include <string>

#include "hystop/tensor.hpp"

namespace hystop {

/// Named trainable tensor with its gradient accumulator.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, Tensor v)
        : name(std::move(n)), value(std::move(v)), grad(value.shape) {}

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

/// Handle to a node on a Tape.
struct Var {
    int id = -1;
};

/// Reverse-mode tape. Built dynamically during a forward pass, consumed by
/// one backward() call, then discarded. Constants do not track gradients;
/// param() leaves accumulate into their Param::grad on backward.
///
/// Complex spectra ride on ordinary tensors shaped [..., bins, 2] with
/// interleaved (re, im) pairs.
///
/// One tape is single-threaded; independent tapes may run concurrently.
class Tape {
public:
    Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor t);
    Var param(Param& p);

    const Tensor& value(Var v) const;
    /// Gradient of a node, valid after backward(); zeros-shaped like value.
    const Tensor& grad_of(Var v) const;

    // -- elementwise and reductions ------------------------------------
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double s);
    Var relu(Var a);
    Var sum(Var a);        // -> [1]
    Var square_sum(Var a); // sum of squares -> [1]
    Var sqrt_scalar(Var a); // [1] -> [1], subderivative 0 at 0

    // -- dense linear algebra ------------------------------------------
    Var matmul(Var a, Var b);    // [m,k] x [k,n]
    Var matmul_nt(Var a, Var b); // [m,k] x [n,k]^T -> [m,n]
    /// y = x W + b over the last dim: x [..., d_in], W [d_in, d_out], b [d_out].
    Var linear(Var x, Var w, Var b);
    /// Pointwise channel mixing: x [..., C_in, L], W [C_out, C_in], b [C_out].
    Var channel_mix(Var x, Var w, Var b);

    // -- 1-d convolution (cross-correlation, zero padding) --------------
    /// x [..., C_in, L], w [C_out, C_in, K], b [C_out] or invalid Var for none.
    Var conv1d(Var x, Var w, Var b, int stride, int padding);
    /// Adjoint geometry: x [..., C_in, L], w [C_in, C_out, K].
    /// L_out = (L-1)*stride - 2*padding + K.
    Var conv_transpose1d(Var x, Var w, Var b, int stride, int padding);

    // -- spectral --------------------------------------------------------
    /// Unnormalized real DFT over the last dim: [..., L] -> [..., nb, 2].
    Var rdft(Var x);
    /// 1/L-normalized inverse: [..., nb, 2] -> [..., length].
    Var irdft(Var spec, int length);
    /// Per-bin complex channel mixing on the first `modes` bins, zero output
    /// beyond: spec [..., C_in, nb, 2], r [C_out, C_in, modes, 2].
    Var spectral_matmul(Var spec, Var r, int modes);

    /// Fused rdft -> truncate to `modes` -> complex mix -> zero fill ->
    /// irdft. Identical map to the composition above; with modes << L the
    /// truncated transforms run as dense trig-table products, which is much
    /// faster than per-row FFTs.
    Var spectral_conv_fused(Var x, Var r, int modes);

    // -- shape plumbing --------------------------------------------------
    Var concat_channels(Var a, Var b);       // along dim -2
    Var crop_or_pad_tail(Var x, int length); // along dim -1, zero pad
    Var add_scalar_bias(Var x, Var b);       // b is [1], broadcast add
    Var reshape(Var x, std::vector<int> shape); // same element count

    /// Reverse sweep from a scalar loss; seed is the initial cotangent.
    /// A tape can be consumed exactly once.
    void backward(Var loss, double seed = 1.0);

    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        std::vector<double> grad;
        bool requires_grad = false;
        std::function<void()> pull;
        Param* bound = nullptr;
    };

    Var push(Tensor value, bool requires_grad);
    Node& node(Var v);
    const Node& node(Var v) const;
    double* grad_data(Var v) { return node(v).grad.data(); }

    std::deque<Node> nodes_;
    bool consumed_ = false;
};

} // namespace hystop
