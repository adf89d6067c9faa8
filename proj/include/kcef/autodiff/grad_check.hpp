// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "kcef/autodiff/tape.hpp"
#include "kcef/autodiff/tensor.hpp"

namespace kcef::ad {

// Finite-difference step per precision: float trades truncation for rounding
// error at 1e-3, double at 1e-5.
template <typename Real>
constexpr Real default_fd_step() {
  if constexpr (sizeof(Real) >= sizeof(double)) {
    return Real(1e-5);
  } else {
    return Real(1e-3);
  }
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Compares backward() against central differences
//   (f(x + eps e_i) - f(x - eps e_i)) / (2 eps)
// for every coordinate of every tensor in `inputs`. The relative error uses
// max(|analytic|, |numeric|, 1e-8) as denominator. `loss_fn` must build a
// scalar on the tape it is handed and must be deterministic. Tensors in
// `inputs` get requires_grad set and their gradients overwritten.
template <typename Real>
GradCheckResult grad_check(const std::function<Tensor<Real>(Tape<Real>&)>& loss_fn,
                           std::span<Tensor<Real>> inputs,
                           Real eps = default_fd_step<Real>());

// Single-input convenience form; returns the worst relative error.
template <typename Real>
double grad_check(
    const std::function<Tensor<Real>(Tape<Real>&, const Tensor<Real>&)>& fn,
    Tensor<Real> x, Real eps = default_fd_step<Real>());

}  // namespace kcef::ad
