// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "kcef/model/optimizer.hpp"
#include "kcef/model/transformer.hpp"

namespace kcef::model {

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 16;
  AdamConfig adam;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

// One Adam update on `trainable`, which must be exactly opt.params() in the
// same order. Every other base or adapter parameter is marked frozen for the
// step and is left bitwise unchanged. Returns the loss before the update.
// Throws Error if the update leaves a non-finite parameter.
template <typename Real>
double train_step(TransformerLM<Real>& model, const erasure::AdapterSet<Real>* adapters,
                  std::span<const corpus::EncodedSequence> batch, OptimizerState<Real>& opt,
                  std::span<const ad::Tensor<Real>> trainable);

// Called after every epoch with the 1-based epoch index and the mean loss of
// that epoch's batches.
using EpochCallback = std::function<void(std::size_t epoch, double mean_batch_loss)>;

// config.epochs passes over `data` in minibatches, reshuffled each epoch by a
// generator seeded with config.shuffle_seed. Returns the number of steps.
template <typename Real>
std::size_t train_epochs(TransformerLM<Real>& model, const erasure::AdapterSet<Real>* adapters,
                         std::span<const corpus::EncodedSequence> data, OptimizerState<Real>& opt,
                         const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace kcef::model
