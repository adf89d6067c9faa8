// Copyright 2026 The kcef Authors
// SPDX-License-Identifier: Apache-2.0

#include "kcef/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace kcef::ad {
namespace {

// Reductions accumulate in double regardless of storage precision.
using Acc = double;

std::size_t product(const Shape& shape, std::size_t begin, std::size_t end) {
  std::size_t n = 1;
  for (std::size_t i = begin; i < end; ++i) n *= shape[i];
  return n;
}

template <typename Real>
void require_same_shape(const char* op, const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                     " vs " + to_string(b.shape()));
  }
}

// C[m,n] += A[m,k] * B[k,n]
template <typename Real>
void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* c_row = c + i * n;
    const Real* a_row = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real a_ip = a_row[p];
      const Real* b_row = b + p * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += a_ip * b_row[j];
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
template <typename Real>
void gemm_tn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* a_row = a + i * k;
    const Real* b_row = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real a_ip = a_row[p];
      Real* c_row = c + p * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += a_ip * b_row[j];
    }
  }
}

template <typename Real>
std::vector<Real> transposed(const Real* src, std::size_t rows, std::size_t cols) {
  std::vector<Real> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  }
  return out;
}

template <typename Real>
Real gelu_value(Real x) {
  constexpr Acc kAlpha = 0.7978845608028654;  // sqrt(2/pi)
  const Acc xd = x;
  const Acc inner = kAlpha * (xd + 0.044715 * xd * xd * xd);
  return static_cast<Real>(0.5 * xd * (1.0 + std::tanh(inner)));
}

template <typename Real>
Acc gelu_derivative(Real x) {
  constexpr Acc kAlpha = 0.7978845608028654;
  const Acc xd = x;
  const Acc inner = kAlpha * (xd + 0.044715 * xd * xd * xd);
  const Acc t = std::tanh(inner);
  return 0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t * t) * kAlpha * (1.0 + 3.0 * 0.044715 * xd * xd);
}

}  // namespace

template <typename Real>
Tensor<Real> matmul(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  auto mismatch = [&] {
    return ShapeError("matmul: incompatible shapes " + to_string(sa) + " and " + to_string(sb));
  };
  if (sa.size() < 2 || sb.size() < 2) throw mismatch();
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa.back();
  const std::size_t n = sb.back();
  if (sb[sb.size() - 2] != k) throw mismatch();
  const bool b_shared = sb.size() == 2;
  if (!b_shared) {
    if (sb.size() != sa.size() || !std::equal(sa.begin(), sa.end() - 2, sb.begin())) {
      throw mismatch();
    }
  }
  const std::size_t batch = product(sa, 0, sa.size() - 2);

  Shape out_shape(sa.begin(), sa.end() - 1);
  out_shape.push_back(n);
  auto out = Tensor<Real>::zeros(out_shape, tape.tracks({&a, &b}));
  {
    const Real* pa = a.data().data();
    const Real* pb = b.data().data();
    Real* pc = out.data().data();
    for (std::size_t bi = 0; bi < batch; ++bi) {
      gemm_nn(pa + bi * m * k, pb + (b_shared ? 0 : bi * k * n), pc + bi * m * n, m, k, n);
    }
  }
  if (out.requires_grad()) {
    tape.record(OpKind::kMatmul, {&a, &b}, out, [a, b, out, batch, m, k, n, b_shared]() mutable {
      const Real* dc = out.grad().data();
      if (a.requires_grad()) {
        Real* da = a.grad().data();
        for (std::size_t bi = 0; bi < batch; ++bi) {
          const Real* pb = b.data().data() + (b_shared ? 0 : bi * k * n);
          std::vector<Real> bt = transposed(pb, k, n);  // [n, k]
          gemm_nn(dc + bi * m * n, bt.data(), da + bi * m * k, m, n, k);
        }
      }
      if (b.requires_grad()) {
        Real* db = b.grad().data();
        for (std::size_t bi = 0; bi < batch; ++bi) {
          gemm_tn(a.data().data() + bi * m * k, dc + bi * m * n,
                  db + (b_shared ? 0 : bi * k * n), m, k, n);
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> add(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape("add", a, b);
  auto out = Tensor<Real>::zeros(a.shape(), tape.tracks({&a, &b}));
  auto pa = a.data();
  auto pb = b.data();
  auto po = out.data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] + pb[i];
  if (out.requires_grad()) {
    tape.record(OpKind::kAdd, {&a, &b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      for (const Tensor<Real>* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        auto dt = t->grad();
        for (std::size_t i = 0; i < g.size(); ++i) dt[i] += g[i];
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> mul(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape("mul", a, b);
  auto out = Tensor<Real>::zeros(a.shape(), tape.tracks({&a, &b}));
  auto pa = a.data();
  auto pb = b.data();
  auto po = out.data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] * pb[i];
  if (out.requires_grad()) {
    tape.record(OpKind::kMul, {&a, &b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      // Read both operands before writing: a and b may be the same tensor.
      if (a.requires_grad()) {
        auto da = a.grad();
        auto vb = b.data();
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * vb[i];
      }
      if (b.requires_grad()) {
        auto db = b.grad();
        auto va = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * va[i];
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> scale(Tape<Real>& tape, const Tensor<Real>& x, Real factor) {
  auto out = Tensor<Real>::zeros(x.shape(), tape.tracks({&x}));
  auto px = x.data();
  auto po = out.data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = px[i] * factor;
  if (out.requires_grad()) {
    tape.record(OpKind::kScale, {&x}, out, [x, out, factor]() mutable {
      auto g = out.grad();
      auto dx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * factor;
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> add_bias(Tape<Real>& tape, const Tensor<Real>& x, const Tensor<Real>& bias) {
  const Shape& sx = x.shape();
  const Shape& sb = bias.shape();
  if (sb.size() > sx.size() || !std::equal(sb.begin(), sb.end(), sx.end() - sb.size())) {
    throw ShapeError("add_bias: bias shape " + to_string(sb) +
                     " is not a trailing shape of " + to_string(sx));
  }
  const std::size_t inner = bias.size();
  const std::size_t outer = x.size() / inner;
  auto out = Tensor<Real>::zeros(sx, tape.tracks({&x, &bias}));
  auto px = x.data();
  auto pb = bias.data();
  auto po = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) po[o * inner + i] = px[o * inner + i] + pb[i];
  }
  if (out.requires_grad()) {
    tape.record(OpKind::kAddBias, {&x, &bias}, out, [x, bias, out, outer, inner]() mutable {
      auto g = out.grad();
      if (x.requires_grad()) {
        auto dx = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto db = bias.grad();
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < inner; ++i) db[i] += g[o * inner + i];
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> softmax(Tape<Real>& tape, const Tensor<Real>& x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                     to_string(s));
  }
  const std::size_t outer = product(s, 0, axis);
  const std::size_t len = s[axis];
  const std::size_t inner = product(s, axis + 1, s.size());
  auto out = Tensor<Real>::zeros(s, tape.tracks({&x}));
  auto px = x.data();
  auto py = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      Real max_v = -std::numeric_limits<Real>::infinity();
      for (std::size_t l = 0; l < len; ++l) max_v = std::max(max_v, px[base + l * inner]);
      Acc total = 0;
      for (std::size_t l = 0; l < len; ++l) {
        const Acc e = std::exp(static_cast<Acc>(px[base + l * inner]) - max_v);
        py[base + l * inner] = static_cast<Real>(e);
        total += e;
      }
      for (std::size_t l = 0; l < len; ++l) {
        py[base + l * inner] = static_cast<Real>(py[base + l * inner] / total);
      }
    }
  }
  if (out.requires_grad()) {
    tape.record(OpKind::kSoftmax, {&x}, out, [x, out, outer, len, inner]() mutable {
      auto g = out.grad();
      auto y = out.data();
      auto dx = x.grad();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * len * inner + in;
          Acc dot = 0;
          for (std::size_t l = 0; l < len; ++l) {
            dot += static_cast<Acc>(g[base + l * inner]) * y[base + l * inner];
          }
          for (std::size_t l = 0; l < len; ++l) {
            const std::size_t idx = base + l * inner;
            dx[idx] += static_cast<Real>(y[idx] * (g[idx] - dot));
          }
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> layer_norm(Tape<Real>& tape, const Tensor<Real>& x, const Tensor<Real>& gamma,
                        const Tensor<Real>& beta, Real eps) {
  const std::size_t d = x.shape().back();
  if (gamma.rank() != 1 || beta.rank() != 1 || gamma.size() != d || beta.size() != d) {
    throw ShapeError("layer_norm: gamma " + to_string(gamma.shape()) + " / beta " +
                     to_string(beta.shape()) + " do not match last dim of " +
                     to_string(x.shape()));
  }
  if (!(eps > 0)) throw Error("layer_norm: eps must be positive");
  const std::size_t rows = x.size() / d;
  auto out = Tensor<Real>::zeros(x.shape(), tape.tracks({&x, &gamma, &beta}));
  std::vector<Real> xhat(x.size());
  std::vector<Acc> rstd(rows);
  auto px = x.data();
  auto pg = gamma.data();
  auto pb = beta.data();
  auto py = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = px.data() + r * d;
    Acc mean = 0;
    for (std::size_t i = 0; i < d; ++i) mean += row[i];
    mean /= static_cast<Acc>(d);
    Acc var = 0;
    for (std::size_t i = 0; i < d; ++i) {
      const Acc c = row[i] - mean;
      var += c * c;
    }
    var /= static_cast<Acc>(d);
    rstd[r] = 1.0 / std::sqrt(var + static_cast<Acc>(eps));
    for (std::size_t i = 0; i < d; ++i) {
      const Real xh = static_cast<Real>((row[i] - mean) * rstd[r]);
      xhat[r * d + i] = xh;
      py[r * d + i] = xh * pg[i] + pb[i];
    }
  }
  if (out.requires_grad()) {
    tape.record(OpKind::kLayerNorm, {&x, &gamma, &beta}, out,
                [x, gamma, beta, out, xhat = std::move(xhat), rstd = std::move(rstd), rows,
                 d]() mutable {
                  auto g = out.grad();
                  if (gamma.requires_grad()) {
                    auto dg = gamma.grad();
                    for (std::size_t r = 0; r < rows; ++r) {
                      for (std::size_t i = 0; i < d; ++i) dg[i] += g[r * d + i] * xhat[r * d + i];
                    }
                  }
                  if (beta.requires_grad()) {
                    auto db = beta.grad();
                    for (std::size_t r = 0; r < rows; ++r) {
                      for (std::size_t i = 0; i < d; ++i) db[i] += g[r * d + i];
                    }
                  }
                  if (x.requires_grad()) {
                    auto dx = x.grad();
                    auto pg = gamma.data();
                    for (std::size_t r = 0; r < rows; ++r) {
                      Acc mean_g = 0;
                      Acc mean_gx = 0;
                      for (std::size_t i = 0; i < d; ++i) {
                        const Acc gi = static_cast<Acc>(g[r * d + i]) * pg[i];
                        mean_g += gi;
                        mean_gx += gi * xhat[r * d + i];
                      }
                      mean_g /= static_cast<Acc>(d);
                      mean_gx /= static_cast<Acc>(d);
                      for (std::size_t i = 0; i < d; ++i) {
                        const Acc gi = static_cast<Acc>(g[r * d + i]) * pg[i];
                        dx[r * d + i] += static_cast<Real>(
                            rstd[r] * (gi - mean_g - xhat[r * d + i] * mean_gx));
                      }
                    }
                  }
                });
  }
  return out;
}

template <typename Real>
Tensor<Real> embedding(Tape<Real>& tape, const Tensor<Real>& table,
                       std::span<const TokenId> ids) {
  if (table.rank() != 2) {
    throw ShapeError("embedding: table must be 2-D, got " + to_string(table.shape()));
  }
  const std::size_t vocab = table.dim(0);
  const std::size_t d = table.dim(1);
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw Error("embedding: id " + std::to_string(id) + " out of range for table of " +
                  std::to_string(vocab) + " rows");
    }
  }
  auto out = Tensor<Real>::zeros({ids.size(), d}, tape.tracks({&table}));
  auto pt = table.data();
  auto po = out.data();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    std::copy_n(pt.begin() + static_cast<std::size_t>(ids[r]) * d, d, po.begin() + r * d);
  }
  if (out.requires_grad()) {
    tape.record(OpKind::kEmbedding, {&table}, out,
                [table, out, rows = std::vector<TokenId>(ids.begin(), ids.end()), d]() mutable {
                  auto g = out.grad();
                  auto dt = table.grad();
                  for (std::size_t r = 0; r < rows.size(); ++r) {
                    Real* dst = dt.data() + static_cast<std::size_t>(rows[r]) * d;
                    for (std::size_t i = 0; i < d; ++i) dst[i] += g[r * d + i];
                  }
                });
  }
  return out;
}

template <typename Real>
Tensor<Real> gelu(Tape<Real>& tape, const Tensor<Real>& x) {
  auto out = Tensor<Real>::zeros(x.shape(), tape.tracks({&x}));
  auto px = x.data();
  auto po = out.data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = gelu_value(px[i]);
  if (out.requires_grad()) {
    tape.record(OpKind::kGelu, {&x}, out, [x, out]() mutable {
      auto g = out.grad();
      auto px = x.data();
      auto dx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        dx[i] += static_cast<Real>(g[i] * gelu_derivative(px[i]));
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> reshape(Tape<Real>& tape, const Tensor<Real>& x, Shape shape) {
  validate_shape(shape);
  if (numel(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  auto out = Tensor<Real>::from_data(std::move(shape),
                                     std::vector<Real>(x.data().begin(), x.data().end()),
                                     tape.tracks({&x}));
  if (out.requires_grad()) {
    tape.record(OpKind::kReshape, {&x}, out, [x, out]() mutable {
      auto g = out.grad();
      auto dx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    });
  }
  return out;
}

namespace {

// For each output linear index, the input linear index it reads.
std::vector<std::size_t> transpose_gather(const Shape& in_shape, std::size_t a, std::size_t b) {
  const std::size_t rank = in_shape.size();
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank - 1; i > 0; --i) in_strides[i - 1] = in_strides[i] * in_shape[i];
  Shape out_shape = in_shape;
  std::swap(out_shape[a], out_shape[b]);
  std::vector<std::size_t> strides = in_strides;  // input stride per output axis
  std::swap(strides[a], strides[b]);

  std::vector<std::size_t> gather(numel(in_shape));
  std::vector<std::size_t> counter(rank, 0);
  std::size_t offset = 0;
  for (std::size_t o = 0; o < gather.size(); ++o) {
    gather[o] = offset;
    for (std::size_t ax = rank; ax-- > 0;) {
      ++counter[ax];
      offset += strides[ax];
      if (counter[ax] < out_shape[ax]) break;
      offset -= strides[ax] * counter[ax];
      counter[ax] = 0;
    }
  }
  return gather;
}

}  // namespace

template <typename Real>
Tensor<Real> transpose(Tape<Real>& tape, const Tensor<Real>& x, std::size_t axis_a,
                       std::size_t axis_b) {
  if (axis_a >= x.rank() || axis_b >= x.rank()) {
    throw ShapeError("transpose: axes (" + std::to_string(axis_a) + ", " +
                     std::to_string(axis_b) + ") invalid for shape " + to_string(x.shape()));
  }
  Shape out_shape = x.shape();
  std::swap(out_shape[axis_a], out_shape[axis_b]);
  std::vector<std::size_t> gather = transpose_gather(x.shape(), axis_a, axis_b);
  auto out = Tensor<Real>::zeros(out_shape, tape.tracks({&x}));
  auto px = x.data();
  auto po = out.data();
  for (std::size_t o = 0; o < po.size(); ++o) po[o] = px[gather[o]];
  if (out.requires_grad()) {
    tape.record(OpKind::kTranspose, {&x}, out, [x, out, gather = std::move(gather)]() mutable {
      auto g = out.grad();
      auto dx = x.grad();
      for (std::size_t o = 0; o < g.size(); ++o) dx[gather[o]] += g[o];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> concat(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b,
                    std::size_t axis) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  bool ok = sa.size() == sb.size() && axis < sa.size();
  for (std::size_t i = 0; ok && i < sa.size(); ++i) ok = (i == axis) || sa[i] == sb[i];
  if (!ok) {
    throw ShapeError("concat: shapes " + to_string(sa) + " and " + to_string(sb) +
                     " cannot be joined on axis " + std::to_string(axis));
  }
  const std::size_t outer = product(sa, 0, axis);
  const std::size_t inner = product(sa, axis + 1, sa.size());
  const std::size_t chunk_a = sa[axis] * inner;
  const std::size_t chunk_b = sb[axis] * inner;
  Shape out_shape = sa;
  out_shape[axis] += sb[axis];
  auto out = Tensor<Real>::zeros(out_shape, tape.tracks({&a, &b}));
  auto pa = a.data();
  auto pb = b.data();
  auto po = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    Real* dst = po.data() + o * (chunk_a + chunk_b);
    std::copy_n(pa.data() + o * chunk_a, chunk_a, dst);
    std::copy_n(pb.data() + o * chunk_b, chunk_b, dst + chunk_a);
  }
  if (out.requires_grad()) {
    tape.record(OpKind::kConcat, {&a, &b}, out, [a, b, out, outer, chunk_a, chunk_b]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto da = a.grad();
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < chunk_a; ++i) da[o * chunk_a + i] += g[o * (chunk_a + chunk_b) + i];
        }
      }
      if (b.requires_grad()) {
        auto db = b.grad();
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < chunk_b; ++i) {
            db[o * chunk_b + i] += g[o * (chunk_a + chunk_b) + chunk_a + i];
          }
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> sum(Tape<Real>& tape, const Tensor<Real>& x) {
  Acc total = 0;
  for (Real v : x.data()) total += v;
  auto out = Tensor<Real>::scalar(static_cast<Real>(total), tape.tracks({&x}));
  if (out.requires_grad()) {
    tape.record(OpKind::kSum, {&x}, out, [x, out]() mutable {
      const Real g = out.grad()[0];
      for (Real& d : x.grad()) d += g;
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> cross_entropy(Tape<Real>& tape, const Tensor<Real>& logits,
                           std::span<const TokenId> targets, std::span<const std::uint8_t> mask) {
  if (logits.rank() != 2) {
    throw ShapeError("cross_entropy: logits must be [T, V], got " + to_string(logits.shape()));
  }
  const std::size_t rows = logits.dim(0);
  const std::size_t vocab = logits.dim(1);
  if (targets.size() != rows || mask.size() != rows) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets and " +
                     std::to_string(mask.size()) + " mask flags for " + std::to_string(rows) +
                     " logit rows");
  }
  std::vector<std::size_t> active;
  for (std::size_t t = 0; t < rows; ++t) {
    if (!mask[t]) continue;
    if (targets[t] < 0 || static_cast<std::size_t>(targets[t]) >= vocab) {
      throw Error("cross_entropy: target id " + std::to_string(targets[t]) +
                  " out of range for vocabulary of " + std::to_string(vocab));
    }
    active.push_back(t);
  }
  if (active.empty()) throw Error("cross_entropy: every position is masked out");

  auto pl = logits.data();
  std::vector<Real> probs(active.size() * vocab);
  Acc total = 0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    const Real* row = pl.data() + active[a] * vocab;
    const Real max_v = *std::max_element(row, row + vocab);
    Acc z = 0;
    for (std::size_t v = 0; v < vocab; ++v) z += std::exp(static_cast<Acc>(row[v]) - max_v);
    const Acc log_z = std::log(z) + max_v;
    for (std::size_t v = 0; v < vocab; ++v) {
      probs[a * vocab + v] = static_cast<Real>(std::exp(static_cast<Acc>(row[v]) - log_z));
    }
    total += log_z - row[static_cast<std::size_t>(targets[active[a]])];
  }
  const Acc count = static_cast<Acc>(active.size());
  auto out = Tensor<Real>::scalar(static_cast<Real>(total / count), tape.tracks({&logits}));
  if (out.requires_grad()) {
    std::vector<TokenId> active_targets;
    active_targets.reserve(active.size());
    for (std::size_t t : active) active_targets.push_back(targets[t]);
    tape.record(OpKind::kCrossEntropy, {&logits}, out,
                [logits, out, active = std::move(active), active_targets = std::move(active_targets),
                 probs = std::move(probs), vocab, count]() mutable {
                  const Acc g = out.grad()[0] / count;
                  auto dl = logits.grad();
                  for (std::size_t a = 0; a < active.size(); ++a) {
                    Real* row = dl.data() + active[a] * vocab;
                    const Real* p = probs.data() + a * vocab;
                    for (std::size_t v = 0; v < vocab; ++v) row[v] += static_cast<Real>(g * p[v]);
                    row[static_cast<std::size_t>(active_targets[a])] -= static_cast<Real>(g);
                  }
                });
  }
  return out;
}

#define KCEF_INSTANTIATE_OPS(Real)                                                            \
  template Tensor<Real> matmul(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);        \
  template Tensor<Real> add(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);           \
  template Tensor<Real> mul(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);           \
  template Tensor<Real> scale(Tape<Real>&, const Tensor<Real>&, Real);                        \
  template Tensor<Real> add_bias(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);      \
  template Tensor<Real> softmax(Tape<Real>&, const Tensor<Real>&, std::size_t);               \
  template Tensor<Real> layer_norm(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&,     \
                                   const Tensor<Real>&, Real);                                \
  template Tensor<Real> embedding(Tape<Real>&, const Tensor<Real>&, std::span<const TokenId>); \
  template Tensor<Real> gelu(Tape<Real>&, const Tensor<Real>&);                               \
  template Tensor<Real> reshape(Tape<Real>&, const Tensor<Real>&, Shape);                     \
  template Tensor<Real> transpose(Tape<Real>&, const Tensor<Real>&, std::size_t, std::size_t); \
  template Tensor<Real> concat(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&,         \
                               std::size_t);                                                  \
  template Tensor<Real> sum(Tape<Real>&, const Tensor<Real>&);                                \
  template Tensor<Real> cross_entropy(Tape<Real>&, const Tensor<Real>&,                       \
                                      std::span<const TokenId>, std::span<const std::uint8_t>);

KCEF_INSTANTIATE_OPS(float)
KCEF_INSTANTIATE_OPS(double)

#undef KCEF_INSTANTIATE_OPS

}  // namespace kcef::ad
