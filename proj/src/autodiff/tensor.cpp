// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/autodiff/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <numeric>
#include <sstream>

namespace kcef::ad {
namespace {

std::atomic<std::uint64_t> next_tensor_id{1};

}  // namespace

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("zero-sized dimension in shape " + to_string(shape));
  }
}

template <typename Real>
Tensor<Real> Tensor<Real>::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), Real(0), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::filled(Shape shape, Real value, bool requires_grad) {
  validate_shape(shape);
  std::vector<Real> data(numel(shape), value);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::from_data(Shape shape, std::vector<Real> data,
                                     bool requires_grad) {
  validate_shape(shape);
  if (data.size() != numel(shape)) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + to_string(shape));
  }
  auto storage = std::make_shared<Storage>();
  storage->shape = std::move(shape);
  storage->data = std::move(data);
  storage->requires_grad = requires_grad;
  storage->id = next_tensor_id.fetch_add(1, std::memory_order_relaxed);
  return Tensor(std::move(storage));
}

template <typename Real>
Tensor<Real> Tensor<Real>::scalar(Real value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (size() != 1) {
    throw ShapeError("item() on non-scalar tensor of shape " + to_string(shape()));
  }
  return storage_->data[0];
}

template <typename Real>
std::span<Real> Tensor<Real>::grad() const {
  if (storage_->grad.empty()) storage_->grad.assign(storage_->data.size(), Real(0));
  return storage_->grad;
}

template <typename Real>
void Tensor<Real>::zero_grad() {
  storage_->grad.assign(storage_->data.size(), Real(0));
}

template <typename Real>
Tensor<Real> Tensor<Real>::clone() const {
  return from_data(storage_->shape, storage_->data, storage_->requires_grad);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace kcef::ad
