// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kcef/util/errors.hpp"

namespace kcef::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// Throws ShapeError unless every dimension is >= 1.
void validate_shape(const Shape& shape);

// A dense row-major tensor with an optional gradient buffer.
//
// Tensor is a handle: copies share storage. Use clone() for a deep copy.
// The gradient buffer is allocated lazily the first time a backward pass (or
// zero_grad) touches it.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, Real value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<Real> data,
                          bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);

  explicit operator bool() const { return storage_ != nullptr; }

  const Shape& shape() const { return storage_->shape; }
  std::size_t dim(std::size_t axis) const { return storage_->shape.at(axis); }
  std::size_t rank() const { return storage_->shape.size(); }
  std::size_t size() const { return storage_->data.size(); }
  // Unique for the lifetime of the process; used by the tape to name nodes.
  std::uint64_t id() const { return storage_->id; }

  std::span<Real> data() { return storage_->data; }
  std::span<const Real> data() const { return storage_->data; }
  Real item() const;

  bool requires_grad() const { return storage_->requires_grad; }
  void set_requires_grad(bool flag) { storage_->requires_grad = flag; }

  bool has_grad() const { return !storage_->grad.empty(); }
  // Allocates (zero-filled) on first use. The gradient buffer is writable
  // through const handles so backward rules can accumulate into inputs.
  std::span<Real> grad() const;
  void zero_grad();
  void clear_grad() { std::vector<Real>().swap(storage_->grad); }

  Tensor clone() const;
  bool same_storage(const Tensor& other) const {
    return storage_ == other.storage_;
  }

 private:
  struct Storage {
    Shape shape;
    std::vector<Real> data;
    std::vector<Real> grad;
    bool requires_grad = false;
    std::uint64_t id = 0;
  };

  explicit Tensor(std::shared_ptr<Storage> storage)
      : storage_(std::move(storage)) {}

  std::shared_ptr<Storage> storage_;
};

template <typename Real>
struct NamedTensor {
  std::string name;
  Tensor<Real> tensor;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace kcef::ad
