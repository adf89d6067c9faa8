// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/autodiff/tape.hpp"

namespace kcef::ad {

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddBias: return "add_bias";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLayerNorm: return "layer_norm";
    case OpKind::kEmbedding: return "embedding";
    case OpKind::kGelu: return "gelu";
    case OpKind::kReshape: return "reshape";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kConcat: return "concat";
    case OpKind::kSum: return "sum";
    case OpKind::kCrossEntropy: return "cross_entropy";
  }
  return "unknown";
}

template <typename Real>
bool Tape<Real>::tracks(std::initializer_list<const Tensor<Real>*> inputs) const {
  if (!recording()) return false;
  for (const Tensor<Real>* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

template <typename Real>
void Tape<Real>::record(OpKind op, std::initializer_list<const Tensor<Real>*> inputs,
                        const Tensor<Real>& output, std::function<void()> backward) {
  Node node{op, {}, output.id(), std::move(backward)};
  node.inputs.reserve(inputs.size());
  for (const Tensor<Real>* t : inputs) node.inputs.push_back(t->id());
  nodes_.push_back(std::move(node));
}

template <typename Real>
void Tape<Real>::backward(const Tensor<Real>& loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;
  if (nodes_.empty() || nodes_.back().output != loss.id()) {
    throw Error("backward(): loss is not the final output of this tape");
  }
  Tensor<Real> seed = loss;
  seed.grad()[0] = Real(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
}

template class Tape<float>;
template class Tape<double>;

}  // namespace kcef::ad
