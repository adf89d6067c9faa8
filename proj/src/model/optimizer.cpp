// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/model/optimizer.hpp"

#include <cmath>

#include "kcef/util/errors.hpp"

namespace kcef::model {

template <typename Real>
OptimizerState<Real>::OptimizerState(AdamConfig config, std::vector<ad::Tensor<Real>> params)
    : config_(config), params_(std::move(params)) {
  if (!(config_.lr > 0) || !(config_.eps > 0) || !(config_.beta1 >= 0 && config_.beta1 < 1) ||
      !(config_.beta2 >= 0 && config_.beta2 < 1)) {
    throw ConfigError("invalid Adam hyperparameters");
  }
  if (params_.empty()) throw ConfigError("optimizer needs at least one parameter");
  for (const auto& p : params_) {
    m_.push_back(ad::Tensor<Real>::zeros(p.shape()));
    v_.push_back(ad::Tensor<Real>::zeros(p.shape()));
  }
}

template <typename Real>
void OptimizerState<Real>::step() {
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ad::Tensor<Real>& p = params_[i];
    auto w = p.data();
    auto g = p.grad();  // zero-filled if nothing reached this parameter
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j];
      const double mj = config_.beta1 * m[j] + (1.0 - config_.beta1) * gj;
      const double vj = config_.beta2 * v[j] + (1.0 - config_.beta2) * gj * gj;
      m[j] = static_cast<Real>(mj);
      v[j] = static_cast<Real>(vj);
      const double update = config_.lr * (mj / c1) / (std::sqrt(vj / c2) + config_.eps);
      w[j] = static_cast<Real>(w[j] - update);
    }
  }
}

template class OptimizerState<float>;
template class OptimizerState<double>;

}  // namespace kcef::model
