#pragma once

#include <vector>

#include "fddm/nn/tensor.hpp"

namespace fddm::nn {

/// 2D cross-correlation. weight is [Cout, Cin, K, K]; bias (may be null) is
/// [1, Cout, 1, 1]. Output extent (H + 2*pad - K) / stride + 1, zero padding.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);

/// Nearest-neighbour 2x upsampling.
Var upsample_nearest(const Var& x);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, float s);

/// x[N,C,H,W] + v[N,C,1,1] broadcast over the plane.
Var add_channel_bias(const Var& x, const Var& v);

Var concat_channels(const std::vector<Var>& parts);
Var slice_channels(const Var& x, int first, int count);
/// Stacks samples along N. All parts share C, H, W.
Var concat_batch(const std::vector<Var>& parts);

Var leaky_relu(const Var& x, float slope);
Var relu(const Var& x);
Var silu(const Var& x);
Var tanh(const Var& x);
Var sigmoid(const Var& x);

/// gamma and beta are [1, C, 1, 1].
Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, float eps = 1e-5f);

/// Exact quarter turns of the spatial plane. left: counter-clockwise.
Var rotate_left(const Var& x);
Var rotate_right(const Var& x);

/// Detached copy (gradient stops here).
Var detach(const Var& x);

// Scalar-valued reductions, shape [1,1,1,1]. Sums are accumulated in double.
Var mean_abs_diff(const Var& a, const Var& b);
Var mean_squared_diff(const Var& a, const Var& b);
/// 0.5 * sum(x^2) per sample, averaged over the batch.
Var half_sum_squares(const Var& x);
/// mean(softplus(sign * x)); sign = -1 gives -log(sigmoid(x)),
/// sign = +1 gives -log(1 - sigmoid(x)).
Var mean_softplus(const Var& x, float sign);
Var mean(const Var& x);

}  // namespace fddm::nn
