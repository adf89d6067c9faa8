// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kcef/corpus/substitution.hpp"
#include "kcef/corpus/vocab.hpp"
#include "kcef/erasure/adapter_set.hpp"
#include "kcef/model/training.hpp"
#include "kcef/model/transformer.hpp"

namespace kcef::erasure {

// W_down ~ N(0, init_std), everything else zero, so the attached model computes
// exactly what the base model computes until W_up or b_up move.
template <typename Real>
AdapterSet<Real> attach_bottleneck(const model::TransformerLM<Real>& model,
                                   const AdapterConfig& config);

// K_p, V_p ~ N(0, init_std) at every layer. Throws ConfigError unless
// prefix_len + max_input_len fits in max_seq_len.
template <typename Real>
AdapterSet<Real> attach_prefix(const model::TransformerLM<Real>& model, const AdapterConfig& config,
                               std::size_t max_input_len = 1);

// Dispatches on config.kind.
template <typename Real>
AdapterSet<Real> attach(const model::TransformerLM<Real>& model, const AdapterConfig& config,
                        std::size_t max_input_len = 1);

// Marks every base parameter frozen and every adapter parameter trainable, and
// returns the adapter parameters. Empty only for a zero-length prefix.
template <typename Real>
std::vector<ad::Tensor<Real>> freeze_and_collect(const model::TransformerLM<Real>& model,
                                                 const AdapterSet<Real>& adapters);

struct ErasureReport {
  // Entry e is measured after e epochs; entry 0 before any update.
  std::vector<double> loss_curve;         // full training-set answer-span loss
  std::vector<double> heldout_p_s_curve;  // empty when there is no held-out split
  double p_s_train = 0.0;
  double p_s_heldout = 0.0;
  std::size_t steps = 0;
  std::uint64_t base_checksum = 0;
};

// Reports progress after each epoch (1-based) with the curves' latest values.
using ErasureCallback = std::function<void(std::size_t epoch, double loss, double heldout_p_s)>;

// Fraction of examples whose greedy answer to (c', q) exactly matches x'.
template <typename Real>
double substituted_accuracy(const model::TransformerLM<Real>& model,
                            const AdapterSet<Real>* adapters, const corpus::Vocab& vocab,
                            std::span<const corpus::SubstitutedExample> examples);

// Minimizes the answer-span cross-entropy of x' given (c', q) over the adapter
// parameters only. Throws DataError for an empty training set or any example
// that breaks the substitution invariants (x' == x included), and Error if the
// base parameters change.
template <typename Real>
ErasureReport erase_train(model::TransformerLM<Real>& model, AdapterSet<Real>& adapters,
                          std::span<const corpus::SubstitutedExample> train,
                          std::span<const corpus::SubstitutedExample> heldout,
                          const corpus::Vocab& vocab, const model::TrainConfig& config,
                          const ErasureCallback& on_epoch = {});

}  // namespace kcef::erasure
