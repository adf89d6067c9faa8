// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace kcef::ad {
namespace {

template <typename Real>
double evaluate(const std::function<Tensor<Real>(Tape<Real>&)>& loss_fn) {
  Tape<Real> tape(Tape<Real>::Mode::kInference);
  Tensor<Real> y = loss_fn(tape);
  if (y.size() != 1) {
    throw ShapeError("grad_check: function must be scalar-valued, got shape " +
                     to_string(y.shape()));
  }
  return static_cast<double>(y.item());
}

}  // namespace

template <typename Real>
GradCheckResult grad_check(const std::function<Tensor<Real>(Tape<Real>&)>& loss_fn,
                           std::span<Tensor<Real>> inputs, Real eps) {
  if (!(eps > 0)) throw Error("grad_check: eps must be positive");

  std::vector<std::vector<Real>> analytic;
  {
    for (Tensor<Real>& t : inputs) {
      t.set_requires_grad(true);
      t.zero_grad();
    }
    Tape<Real> tape;
    Tensor<Real> y = loss_fn(tape);
    if (y.size() != 1) {
      throw ShapeError("grad_check: function must be scalar-valued, got shape " +
                       to_string(y.shape()));
    }
    tape.backward(y);
    for (Tensor<Real>& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());
  }

  GradCheckResult result;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    std::span<Real> x = inputs[ti].data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Real original = x[i];
      const Real plus = original + eps;
      const Real minus = original - eps;
      x[i] = plus;
      const double f_plus = evaluate(loss_fn);
      x[i] = minus;
      const double f_minus = evaluate(loss_fn);
      x[i] = original;
      // Divide by the step actually representable at this precision.
      const double step = static_cast<double>(plus) - static_cast<double>(minus);
      const double numeric = (f_plus - f_minus) / step;
      const double exact = analytic[ti][i];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      const double rel = std::abs(exact - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_tensor = ti;
        result.worst_index = i;
        result.analytic = exact;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

template <typename Real>
double grad_check(const std::function<Tensor<Real>(Tape<Real>&, const Tensor<Real>&)>& fn,
                  Tensor<Real> x, Real eps) {
  std::vector<Tensor<Real>> inputs{x};
  auto bound = [&fn, &x](Tape<Real>& tape) { return fn(tape, x); };
  return grad_check<Real>(bound, std::span<Tensor<Real>>(inputs), eps).max_rel_error;
}

template GradCheckResult grad_check<float>(const std::function<Tensor<float>(Tape<float>&)>&,
                                           std::span<Tensor<float>>, float);
template GradCheckResult grad_check<double>(const std::function<Tensor<double>(Tape<double>&)>&,
                                            std::span<Tensor<double>>, double);
template double grad_check<float>(
    const std::function<Tensor<float>(Tape<float>&, const Tensor<float>&)>&, Tensor<float>,
    float);
template double grad_check<double>(
    const std::function<Tensor<double>(Tape<double>&, const Tensor<double>&)>&, Tensor<double>,
    double);

}  // namespace kcef::ad
