// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/erasure/adapter_set.hpp"

#include "kcef/util/errors.hpp"

namespace kcef::erasure {

std::string_view to_string(AdapterKind kind) {
  return kind == AdapterKind::kBottleneck ? "bottleneck" : "prefix";
}

AdapterKind parse_adapter_kind(std::string_view text) {
  if (text == "bottleneck") return AdapterKind::kBottleneck;
  if (text == "prefix") return AdapterKind::kPrefix;
  throw ConfigError("unknown adapter kind '" + std::string(text) +
                    "' (expected bottleneck or prefix)");
}

void AdapterConfig::validate() const {
  if (kind == AdapterKind::kBottleneck && bottleneck_dim == 0) {
    throw ConfigError("bottleneck_dim must be at least 1");
  }
  if (!(init_std >= 0.0)) throw ConfigError("init_std must be non-negative");
}

std::size_t adapter_parameter_count(const AdapterConfig& config, std::size_t n_layers,
                                    std::size_t d_model) {
  if (config.kind == AdapterKind::kBottleneck) {
    const std::size_t r = config.bottleneck_dim;
    return n_layers * 2 * (d_model * r + r + r * d_model + d_model);
  }
  return n_layers * 2 * config.prefix_len * d_model;
}

template <typename Real>
AdapterSet<Real> allocate_adapters(const AdapterConfig& config, std::size_t n_layers,
                                   std::size_t d_model) {
  config.validate();
  using ad::Tensor;
  AdapterSet<Real> set;
  set.config = config;
  set.n_layers = n_layers;
  set.d_model = d_model;
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (config.kind == AdapterKind::kBottleneck) {
      const std::size_t r = config.bottleneck_dim;
      std::array<Bottleneck<Real>, 2> sites;
      for (auto& b : sites) {
        b.w_down = Tensor<Real>::zeros({d_model, r});
        b.b_down = Tensor<Real>::zeros({r});
        b.w_up = Tensor<Real>::zeros({r, d_model});
        b.b_up = Tensor<Real>::zeros({d_model});
      }
      set.bottleneck.push_back(sites);
    } else {
      Prefix<Real> p;
      if (config.prefix_len > 0) {
        p.keys = Tensor<Real>::zeros({config.prefix_len, d_model});
        p.values = Tensor<Real>::zeros({config.prefix_len, d_model});
      }
      set.prefix.push_back(p);
    }
  }
  return set;
}

template AdapterSet<float> allocate_adapters<float>(const AdapterConfig&, std::size_t, std::size_t);
template AdapterSet<double> allocate_adapters<double>(const AdapterConfig&, std::size_t,
                                                      std::size_t);

}  // namespace kcef::erasure
