// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

// The closed set of differentiable operations. Everything the transformer and
// the adapters compute is composed from these.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "kcef/autodiff/tape.hpp"
#include "kcef/autodiff/tensor.hpp"
#include "kcef/util/types.hpp"

namespace kcef::ad {

// [..., m, k] x [..., k, n] -> [..., m, n]. `b` may also be a plain [k, n]
// matrix, in which case it is shared across every leading batch index of `a`.
template <typename Real>
Tensor<Real> matmul(Tape<Real>& tape, const Tensor<Real>& a,
                    const Tensor<Real>& b);

// Elementwise; shapes must match exactly.
template <typename Real>
Tensor<Real> add(Tape<Real>& tape, const Tensor<Real>& a,
                 const Tensor<Real>& b);
template <typename Real>
Tensor<Real> mul(Tape<Real>& tape, const Tensor<Real>& a,
                 const Tensor<Real>& b);
template <typename Real>
Tensor<Real> scale(Tape<Real>& tape, const Tensor<Real>& x, Real factor);

// x[..., *tail] + bias[*tail], broadcasting `bias` over the leading dims.
template <typename Real>
Tensor<Real> add_bias(Tape<Real>& tape, const Tensor<Real>& x,
                      const Tensor<Real>& bias);

template <typename Real>
Tensor<Real> softmax(Tape<Real>& tape, const Tensor<Real>& x,
                     std::size_t axis);

// Normalizes over the last dimension (population variance).
template <typename Real>
Tensor<Real> layer_norm(Tape<Real>& tape, const Tensor<Real>& x,
                        const Tensor<Real>& gamma, const Tensor<Real>& beta,
                        Real eps);

// Rows of `table` [V, d] selected by `ids`, giving [ids.size(), d].
template <typename Real>
Tensor<Real> embedding(Tape<Real>& tape, const Tensor<Real>& table,
                       std::span<const TokenId> ids);

// tanh approximation.
template <typename Real>
Tensor<Real> gelu(Tape<Real>& tape, const Tensor<Real>& x);

template <typename Real>
Tensor<Real> reshape(Tape<Real>& tape, const Tensor<Real>& x, Shape shape);

// Swaps two axes.
template <typename Real>
Tensor<Real> transpose(Tape<Real>& tape, const Tensor<Real>& x,
                       std::size_t axis_a, std::size_t axis_b);

template <typename Real>
Tensor<Real> concat(Tape<Real>& tape, const Tensor<Real>& a,
                    const Tensor<Real>& b, std::size_t axis);

template <typename Real>
Tensor<Real> sum(Tape<Real>& tape, const Tensor<Real>& x);

// Mean over positions with mask[t] != 0 of -log softmax(logits[t])[targets[t]].
// Log-softmax is fused. logits is [T, V].
template <typename Real>
Tensor<Real> cross_entropy(Tape<Real>& tape, const Tensor<Real>& logits,
                           std::span<const TokenId> targets,
                           std::span<const std::uint8_t> mask);

}  // namespace kcef::ad
