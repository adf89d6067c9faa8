// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/model/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "kcef/util/errors.hpp"

namespace kcef::model {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(adam.lr > 0)) throw ConfigError("learning rate must be positive");
}

template <typename Real>
double train_step(TransformerLM<Real>& model, const erasure::AdapterSet<Real>* adapters,
                  std::span<const corpus::EncodedSequence> batch, OptimizerState<Real>& opt,
                  std::span<const ad::Tensor<Real>> trainable) {
  if (batch.empty()) throw Error("train_step: empty batch");
  if (trainable.empty()) throw Error("train_step: no trainable parameters");
  const auto opt_params = opt.params();
  if (opt_params.size() != trainable.size()) {
    throw Error("train_step: trainable subset does not match the optimizer's parameters");
  }
  for (std::size_t i = 0; i < trainable.size(); ++i) {
    if (!opt_params[i].same_storage(trainable[i])) {
      throw Error("train_step: trainable subset does not match the optimizer's parameters");
    }
  }

  std::vector<ad::Tensor<Real>> all = model.parameters();
  if (adapters != nullptr) {
    for (auto& t : adapters->parameters()) all.push_back(t);
  }
  for (ad::Tensor<Real>& p : all) {
    const bool train = std::any_of(trainable.begin(), trainable.end(),
                                   [&](const ad::Tensor<Real>& t) { return t.same_storage(p); });
    p.set_requires_grad(train);
  }
  for (const ad::Tensor<Real>& t : trainable) {
    const bool known = std::any_of(all.begin(), all.end(),
                                   [&](const ad::Tensor<Real>& p) { return p.same_storage(t); });
    if (!known) throw Error("train_step: trainable tensor is not a model or adapter parameter");
  }

  ad::Tape<Real> tape;
  const ad::Tensor<Real> loss = sequence_loss(tape, model, batch, adapters);
  const double value = loss.item();
  for (ad::Tensor<Real> t : trainable) t.zero_grad();
  tape.backward(loss);
  opt.step();

  for (ad::Tensor<Real> t : trainable) {
    for (Real v : t.data()) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw Error("train_step: update produced a non-finite parameter");
      }
    }
    t.clear_grad();
  }
  return value;
}

template <typename Real>
std::size_t train_epochs(TransformerLM<Real>& model, const erasure::AdapterSet<Real>* adapters,
                         std::span<const corpus::EncodedSequence> data, OptimizerState<Real>& opt,
                         const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw Error("train_epochs: empty dataset");
  std::vector<ad::Tensor<Real>> trainable(opt.params().begin(), opt.params().end());
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.shuffle_seed);
  std::size_t steps = 0;
  std::vector<corpus::EncodedSequence> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
      loss_sum += train_step<Real>(model, adapters, batch, opt, trainable);
      ++batches;
      ++steps;
    }
    if (on_epoch) on_epoch(epoch, loss_sum / static_cast<double>(batches));
  }
  return steps;
}

#define KCEF_INSTANTIATE_TRAINING(Real)                                                          \
  template double train_step(TransformerLM<Real>&, const erasure::AdapterSet<Real>*,             \
                             std::span<const corpus::EncodedSequence>, OptimizerState<Real>&,    \
                             std::span<const ad::Tensor<Real>>);                                 \
  template std::size_t train_epochs(TransformerLM<Real>&, const erasure::AdapterSet<Real>*,      \
                                    std::span<const corpus::EncodedSequence>,                    \
                                    OptimizerState<Real>&, const TrainConfig&,                   \
                                    const EpochCallback&);

KCEF_INSTANTIATE_TRAINING(float)
KCEF_INSTANTIATE_TRAINING(double)

#undef KCEF_INSTANTIATE_TRAINING

}  // namespace kcef::model
