// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

// Adapter parameters that sit on top of a frozen TransformerLM. The data types
// live here so the model's forward pass can consume them; creating and
// training them is in erasure.hpp.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kcef/autodiff/tensor.hpp"

namespace kcef::erasure {

enum class AdapterKind { kBottleneck, kPrefix };

std::string_view to_string(AdapterKind kind);
// Throws ConfigError on anything but "bottleneck" / "prefix".
AdapterKind parse_adapter_kind(std::string_view text);

struct AdapterConfig {
  AdapterKind kind = AdapterKind::kBottleneck;
  std::size_t bottleneck_dim = 16;
  std::size_t prefix_len = 8;
  double init_std = 0.02;
  std::uint64_t seed = 0;

  // Throws ConfigError if kind is bottleneck and bottleneck_dim is 0.
  void validate() const;

  bool operator==(const AdapterConfig&) const = default;
};

// Two insertion points per layer: after the attention sublayer and after the
// MLP sublayer, each before the residual add.
inline constexpr std::size_t kAttentionSite = 0;
inline constexpr std::size_t kMlpSite = 1;

template <typename Real>
struct Bottleneck {
  ad::Tensor<Real> w_down;  // [d, r]
  ad::Tensor<Real> b_down;  // [r]
  ad::Tensor<Real> w_up;    // [r, d]
  ad::Tensor<Real> b_up;    // [d]
};

// Trainable keys and values in post-projection space, [L, d]. Both are null
// when L = 0.
template <typename Real>
struct Prefix {
  ad::Tensor<Real> keys;
  ad::Tensor<Real> values;
};

template <typename Real>
struct AdapterSet {
  AdapterConfig config;
  std::size_t n_layers = 0;
  std::size_t d_model = 0;
  std::vector<std::array<Bottleneck<Real>, 2>> bottleneck;  // kBottleneck only
  std::vector<Prefix<Real>> prefix;                         // kPrefix only

  std::size_t prefix_len() const {
    return config.kind == AdapterKind::kPrefix ? config.prefix_len : 0;
  }

  // Fixed order; checkpoints depend on it.
  std::vector<ad::NamedTensor<Real>> named_parameters() const {
    std::vector<ad::NamedTensor<Real>> out;
    for (std::size_t l = 0; l < bottleneck.size(); ++l) {
      for (std::size_t site = 0; site < 2; ++site) {
        const std::string p =
            "adapter." + std::to_string(l) + (site == kAttentionSite ? ".attn." : ".mlp.");
        const Bottleneck<Real>& b = bottleneck[l][site];
        out.push_back({p + "w_down", b.w_down});
        out.push_back({p + "b_down", b.b_down});
        out.push_back({p + "w_up", b.w_up});
        out.push_back({p + "b_up", b.b_up});
      }
    }
    for (std::size_t l = 0; l < prefix.size(); ++l) {
      if (!prefix[l].keys) continue;
      const std::string p = "prefix." + std::to_string(l) + ".";
      out.push_back({p + "keys", prefix[l].keys});
      out.push_back({p + "values", prefix[l].values});
    }
    return out;
  }

  std::vector<ad::Tensor<Real>> parameters() const {
    std::vector<ad::Tensor<Real>> out;
    for (auto& n : named_parameters()) out.push_back(n.tensor);
    return out;
  }
};

// Correctly shaped, zero-valued adapters (used by loaders and attach_*).
template <typename Real>
AdapterSet<Real> allocate_adapters(const AdapterConfig& config, std::size_t n_layers,
                                   std::size_t d_model);

// n_layers * 2 * (d*r + r + r*d + d) for bottleneck, n_layers * 2 * L * d for
// prefix.
std::size_t adapter_parameter_count(const AdapterConfig& config, std::size_t n_layers,
                                    std::size_t d_model);

}  // namespace kcef::erasure
