// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/model/transformer.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "kcef/autodiff/ops.hpp"
#include "kcef/util/errors.hpp"

namespace kcef::model {

using ad::Shape;
using ad::Tape;
using ad::Tensor;

void ModelConfig::validate() const {
  if (vocab_size < 5) throw ConfigError("vocab_size must be at least 5 (reserved tokens)");
  if (d_model == 0) throw ConfigError("d_model must be positive");
  if (n_layers == 0) throw ConfigError("n_layers must be positive");
  if (n_heads == 0) throw ConfigError("n_heads must be positive");
  if (d_model % n_heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (d_ff == 0) throw ConfigError("d_ff must be positive");
  if (max_seq_len < 8) throw ConfigError("max_seq_len must be at least 8");
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t d = c.d_model;
  const std::size_t f = c.d_ff;
  const std::size_t attention = 4 * (d * d + d);
  const std::size_t mlp = d * f + f + f * d + d;
  const std::size_t norms = 2 * d + 2 * d;
  return c.vocab_size * d + c.max_seq_len * d + c.n_layers * (attention + mlp + norms) + 2 * d;
}

template <typename Real>
std::vector<NamedTensor<Real>> TransformerLM<Real>::named_parameters() const {
  std::vector<NamedTensor<Real>> out{{"token_embedding", token_embedding},
                                     {"position_embedding", position_embedding}};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerParams<Real>& p = layers[l];
    const std::string n = "layer." + std::to_string(l) + ".";
    out.insert(out.end(), {{n + "ln1.gamma", p.ln1_gamma},
                           {n + "ln1.beta", p.ln1_beta},
                           {n + "attn.wq", p.wq},
                           {n + "attn.bq", p.bq},
                           {n + "attn.wk", p.wk},
                           {n + "attn.bk", p.bk},
                           {n + "attn.wv", p.wv},
                           {n + "attn.bv", p.bv},
                           {n + "attn.wo", p.wo},
                           {n + "attn.bo", p.bo},
                           {n + "ln2.gamma", p.ln2_gamma},
                           {n + "ln2.beta", p.ln2_beta},
                           {n + "mlp.w1", p.w1},
                           {n + "mlp.b1", p.b1},
                           {n + "mlp.w2", p.w2},
                           {n + "mlp.b2", p.b2}});
  }
  out.push_back({"final_ln.gamma", lnf_gamma});
  out.push_back({"final_ln.beta", lnf_beta});
  return out;
}

template <typename Real>
std::vector<Tensor<Real>> TransformerLM<Real>::parameters() const {
  std::vector<Tensor<Real>> out;
  for (auto& n : named_parameters()) out.push_back(n.tensor);
  return out;
}

template <typename Real>
std::size_t TransformerLM<Real>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& n : named_parameters()) total += n.tensor.size();
  return total;
}

template <typename Real>
TransformerLM<Real> allocate_model(const ModelConfig& c) {
  c.validate();
  const std::size_t d = c.d_model;
  TransformerLM<Real> m;
  m.config = c;
  m.token_embedding = Tensor<Real>::zeros({c.vocab_size, d});
  m.position_embedding = Tensor<Real>::zeros({c.max_seq_len, d});
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    LayerParams<Real> p;
    p.ln1_gamma = Tensor<Real>::filled({d}, Real(1));
    p.ln1_beta = Tensor<Real>::zeros({d});
    p.wq = Tensor<Real>::zeros({d, d});
    p.bq = Tensor<Real>::zeros({d});
    p.wk = Tensor<Real>::zeros({d, d});
    p.bk = Tensor<Real>::zeros({d});
    p.wv = Tensor<Real>::zeros({d, d});
    p.bv = Tensor<Real>::zeros({d});
    p.wo = Tensor<Real>::zeros({d, d});
    p.bo = Tensor<Real>::zeros({d});
    p.ln2_gamma = Tensor<Real>::filled({d}, Real(1));
    p.ln2_beta = Tensor<Real>::zeros({d});
    p.w1 = Tensor<Real>::zeros({d, c.d_ff});
    p.b1 = Tensor<Real>::zeros({c.d_ff});
    p.w2 = Tensor<Real>::zeros({c.d_ff, d});
    p.b2 = Tensor<Real>::zeros({d});
    m.layers.push_back(std::move(p));
  }
  m.lnf_gamma = Tensor<Real>::filled({d}, Real(1));
  m.lnf_beta = Tensor<Real>::zeros({d});
  if (m.parameter_count() != parameter_count(c)) {
    throw Error("internal: allocated parameter count disagrees with the closed form");
  }
  return m;
}

template <typename Real>
TransformerLM<Real> init_model(const ModelConfig& c) {
  TransformerLM<Real> m = allocate_model<Real>(c);
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  auto fill = [&](Tensor<Real>& t) {
    for (Real& v : t.data()) v = static_cast<Real>(normal(rng));
  };
  fill(m.token_embedding);
  fill(m.position_embedding);
  for (LayerParams<Real>& p : m.layers) {
    for (Tensor<Real>* w : {&p.wq, &p.wk, &p.wv, &p.wo, &p.w1, &p.w2}) fill(*w);
  }
  return m;
}

TokenBatch make_batch(std::span<const std::vector<TokenId>> sequences) {
  if (sequences.empty()) throw Error("make_batch: no sequences");
  TokenBatch b;
  b.batch = sequences.size();
  for (const auto& s : sequences) {
    if (s.empty()) throw Error("make_batch: empty sequence");
    b.seq_len = std::max(b.seq_len, s.size());
  }
  b.ids.assign(b.batch * b.seq_len, TokenId{0});
  for (std::size_t i = 0; i < b.batch; ++i) {
    std::copy(sequences[i].begin(), sequences[i].end(), b.ids.begin() + i * b.seq_len);
    b.lengths.push_back(sequences[i].size());
  }
  return b;
}

TokenBatch make_batch(std::span<const corpus::EncodedSequence> sequences) {
  std::vector<std::vector<TokenId>> ids;
  ids.reserve(sequences.size());
  for (const auto& s : sequences) ids.push_back(s.ids);
  return make_batch(ids);
}

namespace {

// Additive attention mask [B*H, T, L+T]: prefix slots always visible, real
// keys visible when causal and not padding.
template <typename Real>
Tensor<Real> attention_mask(const TokenBatch& batch, std::size_t heads, std::size_t prefix) {
  const std::size_t t_len = batch.seq_len;
  const std::size_t k_len = prefix + t_len;
  const Real blocked = -std::numeric_limits<Real>::infinity();
  std::vector<Real> mask(batch.batch * heads * t_len * k_len, Real(0));
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      Real* base = mask.data() + (b * heads + h) * t_len * k_len;
      for (std::size_t q = 0; q < t_len; ++q) {
        for (std::size_t k = 0; k < t_len; ++k) {
          if (k > q || k >= batch.lengths[b]) base[q * k_len + prefix + k] = blocked;
        }
      }
    }
  }
  return Tensor<Real>::from_data({batch.batch * heads, t_len, k_len}, std::move(mask));
}

// [B*T, d] -> [B*H, T, dh]
template <typename Real>
Tensor<Real> split_heads(Tape<Real>& tape, const Tensor<Real>& x, std::size_t b, std::size_t t,
                         std::size_t heads) {
  const std::size_t dh = x.dim(x.rank() - 1) / heads;
  Tensor<Real> y = ad::reshape(tape, x, Shape{b, t, heads, dh});
  y = ad::transpose(tape, y, 1, 2);
  return ad::reshape(tape, y, Shape{b * heads, t, dh});
}

template <typename Real>
Tensor<Real> bottleneck(Tape<Real>& tape, const Tensor<Real>& h,
                        const erasure::Bottleneck<Real>& a) {
  Tensor<Real> z = ad::gelu(tape, ad::add_bias(tape, ad::matmul(tape, h, a.w_down), a.b_down));
  z = ad::add_bias(tape, ad::matmul(tape, z, a.w_up), a.b_up);
  return ad::add(tape, h, z);
}

template <typename Real>
Tensor<Real> attention(Tape<Real>& tape, const LayerParams<Real>& p, const Tensor<Real>& x,
                       const TokenBatch& batch, std::size_t heads, const Tensor<Real>& mask,
                       const erasure::Prefix<Real>* prefix) {
  const std::size_t b = batch.batch;
  const std::size_t t = batch.seq_len;
  const std::size_t d = x.dim(1);
  const std::size_t dh = d / heads;

  Tensor<Real> q = ad::add_bias(tape, ad::matmul(tape, x, p.wq), p.bq);
  Tensor<Real> k = ad::add_bias(tape, ad::matmul(tape, x, p.wk), p.bk);
  Tensor<Real> v = ad::add_bias(tape, ad::matmul(tape, x, p.wv), p.bv);

  std::size_t k_len = t;
  if (prefix != nullptr && prefix->keys) {
    const std::size_t l = prefix->keys.dim(0);
    const Tensor<Real> zeros = Tensor<Real>::zeros({b, l, d});
    k = ad::concat(tape, ad::add_bias(tape, zeros, prefix->keys),
                   ad::reshape(tape, k, Shape{b, t, d}), 1);
    v = ad::concat(tape, ad::add_bias(tape, zeros, prefix->values),
                   ad::reshape(tape, v, Shape{b, t, d}), 1);
    k_len = l + t;
  }

  Tensor<Real> qh = split_heads(tape, q, b, t, heads);
  Tensor<Real> kh = split_heads(tape, k, b, k_len, heads);
  Tensor<Real> vh = split_heads(tape, v, b, k_len, heads);

  Tensor<Real> scores = ad::matmul(tape, qh, ad::transpose(tape, kh, 1, 2));
  scores = ad::scale(tape, scores, static_cast<Real>(1.0 / std::sqrt(static_cast<double>(dh))));
  scores = ad::add(tape, scores, mask);
  Tensor<Real> probs = ad::softmax(tape, scores, 2);
  Tensor<Real> out = ad::matmul(tape, probs, vh);  // [B*H, T, dh]
  out = ad::reshape(tape, out, Shape{b, heads, t, dh});
  out = ad::transpose(tape, out, 1, 2);
  out = ad::reshape(tape, out, Shape{b * t, d});
  return ad::add_bias(tape, ad::matmul(tape, out, p.wo), p.bo);
}

}  // namespace

template <typename Real>
Tensor<Real> forward(Tape<Real>& tape, const TransformerLM<Real>& model, const TokenBatch& batch,
                     const erasure::AdapterSet<Real>* adapters) {
  const ModelConfig& c = model.config;
  const std::size_t prefix = adapters != nullptr ? adapters->prefix_len() : 0;
  if (batch.batch == 0 || batch.seq_len == 0) throw ShapeError("forward: empty batch");
  if (batch.ids.size() != batch.batch * batch.seq_len || batch.lengths.size() != batch.batch) {
    throw ShapeError("forward: malformed token batch");
  }
  if (batch.seq_len + prefix > c.max_seq_len) {
    throw ShapeError("forward: sequence length " + std::to_string(batch.seq_len) +
                     (prefix > 0 ? " plus prefix " + std::to_string(prefix) : std::string()) +
                     " exceeds max_seq_len " + std::to_string(c.max_seq_len));
  }
  for (TokenId id : batch.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= c.vocab_size) {
      throw DataError("forward: token id " + std::to_string(id) + " outside vocabulary of size " +
                      std::to_string(c.vocab_size));
    }
  }
  if (adapters != nullptr) {
    if (adapters->n_layers != c.n_layers || adapters->d_model != c.d_model) {
      throw ShapeError("forward: adapter set was built for a different model shape");
    }
  }

  const std::size_t n = batch.batch * batch.seq_len;
  std::vector<TokenId> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = static_cast<TokenId>(i % batch.seq_len);

  Tensor<Real> x = ad::add(tape, ad::embedding(tape, model.token_embedding, batch.ids),
                           ad::embedding(tape, model.position_embedding, positions));
  const Tensor<Real> mask = attention_mask<Real>(batch, c.n_heads, prefix);
  const bool use_bottleneck =
      adapters != nullptr && adapters->config.kind == erasure::AdapterKind::kBottleneck;
  const Real ln_eps = Real(1e-5);

  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const LayerParams<Real>& p = model.layers[l];
    const erasure::Prefix<Real>* layer_prefix =
        prefix > 0 ? &adapters->prefix[l] : nullptr;

    Tensor<Real> h = ad::layer_norm(tape, x, p.ln1_gamma, p.ln1_beta, ln_eps);
    h = attention(tape, p, h, batch, c.n_heads, mask, layer_prefix);
    if (use_bottleneck) h = bottleneck(tape, h, adapters->bottleneck[l][erasure::kAttentionSite]);
    x = ad::add(tape, x, h);

    h = ad::layer_norm(tape, x, p.ln2_gamma, p.ln2_beta, ln_eps);
    h = ad::gelu(tape, ad::add_bias(tape, ad::matmul(tape, h, p.w1), p.b1));
    h = ad::add_bias(tape, ad::matmul(tape, h, p.w2), p.b2);
    if (use_bottleneck) h = bottleneck(tape, h, adapters->bottleneck[l][erasure::kMlpSite]);
    x = ad::add(tape, x, h);
  }

  x = ad::layer_norm(tape, x, model.lnf_gamma, model.lnf_beta, ln_eps);
  Tensor<Real> logits = ad::matmul(tape, x, ad::transpose(tape, model.token_embedding, 0, 1));
  return ad::reshape(tape, logits, Shape{batch.batch, batch.seq_len, c.vocab_size});
}

namespace {

struct Targets {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;
  std::size_t active = 0;
};

// Position t predicts token t+1; it contributes when t+1 is inside the
// answer span.
Targets answer_targets(const TokenBatch& batch, std::span<const corpus::EncodedSequence> seqs) {
  Targets out;
  out.ids.assign(batch.batch * batch.seq_len, TokenId{0});
  out.mask.assign(batch.batch * batch.seq_len, 0);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const auto& s = seqs[b];
    if (s.answer_begin == 0 || s.answer_end > s.ids.size() || s.answer_begin >= s.answer_end) {
      throw DataError("example " + s.example_id + " has an invalid answer span");
    }
    for (std::size_t t = 0; t + 1 < s.ids.size(); ++t) {
      out.ids[b * batch.seq_len + t] = s.ids[t + 1];
      if (t + 1 >= s.answer_begin && t + 1 < s.answer_end) {
        out.mask[b * batch.seq_len + t] = 1;
        ++out.active;
      }
    }
  }
  return out;
}

}  // namespace

template <typename Real>
Tensor<Real> sequence_loss(Tape<Real>& tape, const TransformerLM<Real>& model,
                           std::span<const corpus::EncodedSequence> batch,
                           const erasure::AdapterSet<Real>* adapters) {
  if (batch.empty()) throw Error("sequence_loss: empty batch");
  const TokenBatch tokens = make_batch(batch);
  const Targets targets = answer_targets(tokens, batch);
  Tensor<Real> logits = forward(tape, model, tokens, adapters);
  logits = ad::reshape(tape, logits, Shape{tokens.batch * tokens.seq_len, model.config.vocab_size});
  return ad::cross_entropy(tape, logits, targets.ids, targets.mask);
}

template <typename Real>
double dataset_loss(const TransformerLM<Real>& model, std::span<const corpus::EncodedSequence> data,
                    const erasure::AdapterSet<Real>* adapters, std::size_t batch_size) {
  if (data.empty()) throw Error("dataset_loss: empty dataset");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    auto chunk = data.subspan(start, std::min(batch_size, data.size() - start));
    Tape<Real> tape(Tape<Real>::Mode::kInference);
    const double mean = sequence_loss(tape, model, chunk, adapters).item();
    std::size_t active = 0;
    for (const auto& s : chunk) active += s.answer_end - s.answer_begin;
    total += mean * static_cast<double>(active);
    count += active;
  }
  return total / static_cast<double>(count);
}

template <typename Real>
std::uint64_t checksum(std::span<const NamedTensor<Real>> tensors) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& n : tensors) {
    const auto data = n.tensor.data();
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    for (std::size_t i = 0; i < data.size_bytes(); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

template <typename Real>
std::uint64_t checksum(const TransformerLM<Real>& model) {
  const auto named = model.named_parameters();
  return checksum<Real>(std::span<const NamedTensor<Real>>(named));
}

#define KCEF_INSTANTIATE_MODEL(Real)                                                          \
  template struct TransformerLM<Real>;                                                        \
  template TransformerLM<Real> allocate_model<Real>(const ModelConfig&);                      \
  template TransformerLM<Real> init_model<Real>(const ModelConfig&);                          \
  template Tensor<Real> forward(Tape<Real>&, const TransformerLM<Real>&, const TokenBatch&,   \
                                const erasure::AdapterSet<Real>*);                            \
  template Tensor<Real> sequence_loss(Tape<Real>&, const TransformerLM<Real>&,                \
                                      std::span<const corpus::EncodedSequence>,               \
                                      const erasure::AdapterSet<Real>*);                      \
  template double dataset_loss(const TransformerLM<Real>&,                                    \
                               std::span<const corpus::EncodedSequence>,                      \
                               const erasure::AdapterSet<Real>*, std::size_t);                \
  template std::uint64_t checksum<Real>(std::span<const NamedTensor<Real>>);                  \
  template std::uint64_t checksum<Real>(const TransformerLM<Real>&);

KCEF_INSTANTIATE_MODEL(float)
KCEF_INSTANTIATE_MODEL(double)

#undef KCEF_INSTANTIATE_MODEL

}  // namespace kcef::model
