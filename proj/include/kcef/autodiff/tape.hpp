// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "kcef/autodiff/tensor.hpp"

namespace kcef::ad {

enum class OpKind {
  kMatmul,
  kAdd,
  kMul,
  kScale,
  kAddBias,
  kSoftmax,
  kLayerNorm,
  kEmbedding,
  kGelu,
  kReshape,
  kTranspose,
  kConcat,
  kSum,
  kCrossEntropy,
};

std::string_view op_name(OpKind op);

// Records differentiable operations in execution order and replays their
// backward rules in reverse.
//
// A node is appended only when at least one input requires a gradient, so a
// tape built over frozen inputs stays empty. An inference tape never records.
template <typename Real>
class Tape {
 public:
  enum class Mode { kTraining, kInference };

  struct Node {
    OpKind op;
    std::vector<std::uint64_t> inputs;
    std::uint64_t output;
    // Holds the saved intermediates by capture.
    std::function<void()> backward;
  };

  explicit Tape(Mode mode = Mode::kTraining) : mode_(mode) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::kTraining; }

  // True when an op over `inputs` must produce a gradient-tracking output.
  bool tracks(std::initializer_list<const Tensor<Real>*> inputs) const;

  void record(OpKind op, std::initializer_list<const Tensor<Real>*> inputs,
              const Tensor<Real>& output, std::function<void()> backward);

  std::span<const Node> nodes() const { return nodes_; }

  // Seeds d(loss)/d(loss) = 1 and runs every node's backward rule once, last
  // to first. Gradients accumulate into existing buffers. `loss` must be a
  // single-element tensor and, if anything was recorded, the output of the
  // final node.
  void backward(const Tensor<Real>& loss);

  void clear() { nodes_.clear(); }

 private:
  Mode mode_;
  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace kcef::ad
