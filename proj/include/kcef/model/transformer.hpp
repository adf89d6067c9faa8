// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

// Pre-norm GPT-style decoder with learned positions and an output projection
// tied to the token embedding.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kcef/autodiff/tape.hpp"
#include "kcef/autodiff/tensor.hpp"
#include "kcef/corpus/encoding.hpp"
#include "kcef/erasure/adapter_set.hpp"
#include "kcef/model/config.hpp"

namespace kcef::model {

using ad::NamedTensor;

template <typename Real>
struct LayerParams {
  ad::Tensor<Real> ln1_gamma, ln1_beta;
  ad::Tensor<Real> wq, bq, wk, bk, wv, bv, wo, bo;
  ad::Tensor<Real> ln2_gamma, ln2_beta;
  ad::Tensor<Real> w1, b1, w2, b2;
};

template <typename Real>
struct TransformerLM {
  ModelConfig config;
  ad::Tensor<Real> token_embedding;     // [V, d], also the output projection
  ad::Tensor<Real> position_embedding;  // [S, d]
  std::vector<LayerParams<Real>> layers;
  ad::Tensor<Real> lnf_gamma, lnf_beta;

  // Fixed order; checkpoints and checksums depend on it.
  std::vector<NamedTensor<Real>> named_parameters() const;
  std::vector<ad::Tensor<Real>> parameters() const;
  std::size_t parameter_count() const;
};

// Weights ~ N(0, 0.02) from a generator seeded with config.seed; biases and
// layer-norm betas zero, gammas one. The draws are made in double, so float
// and double models from the same config hold the same values up to rounding.
template <typename Real>
TransformerLM<Real> init_model(const ModelConfig& config);

// Builds an empty model with correctly shaped zero tensors (used by loaders).
template <typename Real>
TransformerLM<Real> allocate_model(const ModelConfig& config);

// Row-major [batch, seq_len] token ids, right-padded with PAD. Positions at or
// beyond lengths[b] are padding: they are never attended to as keys.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::vector<TokenId> ids;
  std::vector<std::size_t> lengths;
};

TokenBatch make_batch(std::span<const std::vector<TokenId>> sequences);
TokenBatch make_batch(std::span<const corpus::EncodedSequence> sequences);

// Logits [batch, seq_len, V]. Throws ShapeError when seq_len plus the prefix
// length exceeds max_seq_len, DataError for ids outside the vocabulary.
template <typename Real>
ad::Tensor<Real> forward(ad::Tape<Real>& tape, const TransformerLM<Real>& model,
                         const TokenBatch& batch,
                         const erasure::AdapterSet<Real>* adapters = nullptr);

// Mean cross-entropy over answer-span targets (answer tokens plus EOS) of the
// whole batch.
template <typename Real>
ad::Tensor<Real> sequence_loss(ad::Tape<Real>& tape, const TransformerLM<Real>& model,
                               std::span<const corpus::EncodedSequence> batch,
                               const erasure::AdapterSet<Real>* adapters = nullptr);

// Token-weighted mean answer-span loss over a dataset, evaluated without
// recording gradients.
template <typename Real>
double dataset_loss(const TransformerLM<Real>& model, std::span<const corpus::EncodedSequence> data,
                    const erasure::AdapterSet<Real>* adapters = nullptr,
                    std::size_t batch_size = 32);

// FNV-1a 64 over the raw bytes of every tensor, in order.
template <typename Real>
std::uint64_t checksum(std::span<const NamedTensor<Real>> tensors);
template <typename Real>
std::uint64_t checksum(const TransformerLM<Real>& model);

extern template struct TransformerLM<float>;
extern template struct TransformerLM<double>;

}  // namespace kcef::model
