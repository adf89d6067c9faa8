// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kcef/autodiff/tensor.hpp"

namespace kcef::model {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over a fixed list of parameters. No weight decay.
template <typename Real>
class OptimizerState {
 public:
  OptimizerState(AdamConfig config, std::vector<ad::Tensor<Real>> params);

  // Applies one update from each parameter's current gradient. Parameters
  // without a gradient buffer are treated as having zero gradient.
  void step();

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_; }
  std::span<const ad::Tensor<Real>> params() const { return params_; }
  const ad::Tensor<Real>& first_moment(std::size_t i) const { return m_.at(i); }
  const ad::Tensor<Real>& second_moment(std::size_t i) const { return v_.at(i); }

 private:
  AdamConfig config_;
  std::vector<ad::Tensor<Real>> params_;
  std::vector<ad::Tensor<Real>> m_;
  std::vector<ad::Tensor<Real>> v_;
  std::uint64_t step_ = 0;
};

extern template class OptimizerState<float>;
extern template class OptimizerState<double>;

}  // namespace kcef::model
