// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/erasure/erasure.hpp"

#include <random>

#include "kcef/corpus/encoding.hpp"
#include "kcef/model/predict.hpp"
#include "kcef/util/errors.hpp"

namespace kcef::erasure {

using ad::Tensor;
using model::TransformerLM;

namespace {

template <typename Real>
void fill_normal(Tensor<Real>& t, std::mt19937_64& rng, double std) {
  std::normal_distribution<double> normal(0.0, std);
  for (Real& v : t.data()) v = static_cast<Real>(std > 0 ? normal(rng) : 0.0);
}

}  // namespace

template <typename Real>
AdapterSet<Real> attach_bottleneck(const TransformerLM<Real>& model, const AdapterConfig& config) {
  if (config.kind != AdapterKind::kBottleneck) throw ConfigError("attach_bottleneck: kind must be bottleneck");
  AdapterSet<Real> set =
      allocate_adapters<Real>(config, model.config.n_layers, model.config.d_model);
  std::mt19937_64 rng(config.seed);
  for (auto& layer : set.bottleneck) {
    for (auto& site : layer) fill_normal(site.w_down, rng, config.init_std);
  }
  return set;
}

template <typename Real>
AdapterSet<Real> attach_prefix(const TransformerLM<Real>& model, const AdapterConfig& config,
                               std::size_t max_input_len) {
  if (config.kind != AdapterKind::kPrefix) throw ConfigError("attach_prefix: kind must be prefix");
  if (config.prefix_len + max_input_len > model.config.max_seq_len) {
    throw ConfigError("prefix length " + std::to_string(config.prefix_len) + " plus input length " +
                      std::to_string(max_input_len) + " exceeds max_seq_len " +
                      std::to_string(model.config.max_seq_len));
  }
  AdapterSet<Real> set =
      allocate_adapters<Real>(config, model.config.n_layers, model.config.d_model);
  std::mt19937_64 rng(config.seed);
  for (auto& p : set.prefix) {
    if (!p.keys) continue;
    fill_normal(p.keys, rng, config.init_std);
    fill_normal(p.values, rng, config.init_std);
  }
  return set;
}

template <typename Real>
AdapterSet<Real> attach(const TransformerLM<Real>& model, const AdapterConfig& config,
                        std::size_t max_input_len) {
  return config.kind == AdapterKind::kBottleneck ? attach_bottleneck(model, config)
                                                 : attach_prefix(model, config, max_input_len);
}

template <typename Real>
std::vector<Tensor<Real>> freeze_and_collect(const TransformerLM<Real>& model,
                                             const AdapterSet<Real>& adapters) {
  for (Tensor<Real> p : model.parameters()) p.set_requires_grad(false);
  std::vector<Tensor<Real>> out = adapters.parameters();
  for (Tensor<Real>& p : out) p.set_requires_grad(true);
  return out;
}

template <typename Real>
double substituted_accuracy(const TransformerLM<Real>& model, const AdapterSet<Real>* adapters,
                            const corpus::Vocab& vocab,
                            std::span<const corpus::SubstitutedExample> examples) {
  if (examples.empty()) return 0.0;
  std::vector<model::Query> queries;
  for (const auto& s : examples) queries.push_back({s.base.id, s.context_sub, s.base.question});
  const auto predictions = model::predict_answers(model, adapters, vocab, std::span(queries));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    hits += corpus::exact_match(predictions[i], examples[i].answer_sub);
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

template <typename Real>
ErasureReport erase_train(TransformerLM<Real>& model, AdapterSet<Real>& adapters,
                          std::span<const corpus::SubstitutedExample> train,
                          std::span<const corpus::SubstitutedExample> heldout,
                          const corpus::Vocab& vocab, const model::TrainConfig& config,
                          const ErasureCallback& on_epoch) {
  if (train.empty()) throw DataError("erase_train: empty training set");
  for (auto set : {train, heldout}) {
    for (const auto& s : set) {
      if (auto violation = corpus::substitution_violation(s)) {
        throw DataError("erase_train: example " + s.base.id + ": " + *violation);
      }
    }
  }
  config.validate();

  const std::size_t budget = model.config.max_seq_len - adapters.prefix_len();
  std::vector<corpus::EncodedSequence> encoded;
  for (const auto& s : train) encoded.push_back(corpus::encode_training_sequence(s, vocab, budget));

  ErasureReport report;
  report.base_checksum = model::checksum(model);
  const AdapterSet<Real>* a = &adapters;
  report.loss_curve.push_back(model::dataset_loss(model, std::span(encoded), a));
  if (!heldout.empty()) report.heldout_p_s_curve.push_back(substituted_accuracy(model, a, vocab, heldout));

  const std::vector<Tensor<Real>> trainable = freeze_and_collect(model, adapters);
  if (!trainable.empty() && config.epochs > 0) {
    model::OptimizerState<Real> opt(config.adam, trainable);
    report.steps = model::train_epochs<Real>(
        model, a, encoded, opt, config, [&](std::size_t epoch, double) {
          report.loss_curve.push_back(model::dataset_loss(model, std::span(encoded), a));
          double p = 0.0;
          if (!heldout.empty()) {
            p = substituted_accuracy(model, a, vocab, heldout);
            report.heldout_p_s_curve.push_back(p);
          }
          if (on_epoch) on_epoch(epoch, report.loss_curve.back(), p);
        });
  }

  if (model::checksum(model) != report.base_checksum) {
    throw Error("erase_train: base model parameters changed during erasure training");
  }
  report.p_s_train = substituted_accuracy(model, a, vocab, train);
  report.p_s_heldout = heldout.empty() ? 0.0 : report.heldout_p_s_curve.back();
  return report;
}

#define KCEF_INSTANTIATE_ERASURE(Real)                                                          \
  template AdapterSet<Real> attach_bottleneck(const TransformerLM<Real>&, const AdapterConfig&); \
  template AdapterSet<Real> attach_prefix(const TransformerLM<Real>&, const AdapterConfig&,     \
                                          std::size_t);                                         \
  template AdapterSet<Real> attach(const TransformerLM<Real>&, const AdapterConfig&,            \
                                   std::size_t);                                                \
  template std::vector<Tensor<Real>> freeze_and_collect(const TransformerLM<Real>&,             \
                                                        const AdapterSet<Real>&);               \
  template double substituted_accuracy(const TransformerLM<Real>&, const AdapterSet<Real>*,     \
                                       const corpus::Vocab&,                                    \
                                       std::span<const corpus::SubstitutedExample>);            \
  template ErasureReport erase_train(TransformerLM<Real>&, AdapterSet<Real>&,                   \
                                     std::span<const corpus::SubstitutedExample>,               \
                                     std::span<const corpus::SubstitutedExample>,               \
                                     const corpus::Vocab&, const model::TrainConfig&,           \
                                     const ErasureCallback&);

KCEF_INSTANTIATE_ERASURE(float)
KCEF_INSTANTIATE_ERASURE(double)

#undef KCEF_INSTANTIATE_ERASURE

}  // namespace kcef::erasure
