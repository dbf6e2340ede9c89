// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "duadeep/tape.hpp"
#include "duadeep/tensor.hpp"

// Differentiable primitives. Every op records its output on the tape of its
// first input; all inputs must share that tape. Shape errors throw
// ErrorKind::kDimension naming both operand shapes.
//
// Explicitly instantiated for float, double and long double in src/ops.cpp.
namespace duadeep::ops {

/// [m x k] * [k x n] -> [m x n].
template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> transpose(const Var<T>& a);

/// Elementwise sum of equally shaped tensors.
template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);

/// x[..., n] + bias[n], broadcasting over leading positions.
template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& bias);

template <typename T>
Var<T> scale(const Var<T>& x, T factor);

/// max(0, x). The subgradient at exactly 0 is 0.
template <typename T>
Var<T> relu(const Var<T>& x);

/// Row-wise softmax of an [m x n] matrix, max-subtracted.
template <typename T>
Var<T> softmax_rows(const Var<T>& x);

/// Normalizes each position over the last axis with the population variance,
/// then applies gamma * xhat + beta.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5));

/// "Same"-length, stride-1, zero-padded cross-correlation.
/// x: [L x C_in], w: [K x C_in x C_out], b: [C_out] -> [L x C_out]. K must be odd.
template <typename T>
Var<T> conv1d_same(const Var<T>& x, const Var<T>& w, const Var<T>& b);

/// Mean of rows of x [L x D] where mask[row] == 1, giving [D].
template <typename T>
Var<T> masked_mean_rows(const Var<T>& x, const Tensor<T>& mask);

/// Zeroes rows of x [L x D] where mask[row] == 0.
template <typename T>
Var<T> mask_rows(const Var<T>& x, const Tensor<T>& mask);

/// Adds -1e9 to every column j of scores [m x L] with mask[j] == 0.
template <typename T>
Var<T> mask_keys(const Var<T>& scores, const Tensor<T>& mask);

/// Concatenation along the last axis; leading dimensions must agree.
template <typename T>
Var<T> concat_last(const std::vector<Var<T>>& xs);

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape);

/// Sum of all elements, shape [1].
template <typename T>
Var<T> sum(const Var<T>& x);

/// mean((pred - target)^2) over all elements; pred and target share a shape.
template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Tensor<T>& target);

/// Inverted dropout. Identity when `training` is false or rate is 0.
template <typename T>
Var<T> dropout(const Var<T>& x, T rate, std::uint64_t seed, bool training);

}  // namespace duadeep::ops
