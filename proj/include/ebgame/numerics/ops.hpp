#pragma once

// Differentiable tensor operations recorded on a Graph.
//
// Every op computes its forward value eagerly and registers a closure that
// maps the output gradient back onto its inputs. Gradients always accumulate
// (+=) so a value consumed by several ops receives the sum of their
// contributions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ebgame/errors.hpp"
#include "ebgame/numerics/graph.hpp"
#include "ebgame/numerics/tensor.hpp"

namespace ebgame::ops {

namespace detail {

inline void require_same_graph(Var a, Var b, const char* op) {
  if (a.graph != b.graph) throw ContractError(std::string(op) + ": operands from different graphs");
}

inline void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

inline void require_matrix(Var a, const char* op) {
  if (a.shape().size() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

// c[M×N] += a[M×K] * b[K×N]
inline void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
                    std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c.data() + i * n;
    const double* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[M×K] += a[M×N] * b[K×N]^T
// b is transposed once so the inner loop runs over contiguous rows.
inline void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
                    std::size_t m, std::size_t n, std::size_t k) {
  std::vector<double> bt(n * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  gemm_nn(a, bt, c, m, n, k);
}

// c[K×N] += a[M×K]^T * b[M×N]
inline void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
                    std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    const double* brow = b.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename Fwd, typename Deriv>
Var unary(Var x, Fwd fwd, Deriv deriv) {
  Graph& g = *x.graph;
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return g.record(std::move(out), {x.id}, [x = x.id, deriv](Graph& g, NodeId self) {
    if (!g.needs_grad(x)) return;
    const auto& go = g.grad(self);
    const Tensor& xv = g.value(x);
    const Tensor& yv = g.value(self);
    auto& gx = g.grad(x);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * deriv(xv[i], yv[i]);
  });
}

}  // namespace detail

// Cuts the gradient path: the result is a constant copy of x.
inline Var detach(Var x) { return x.graph->constant(x.value()); }

inline Var add(Var a, Var b) {
  detail::require_same_graph(a, b, "add");
  detail::require_same_shape(a, b, "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.graph->record(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Graph& g, NodeId self) {
    const auto& go = g.grad(self);
    for (NodeId in : {a, b}) {
      if (!g.needs_grad(in)) continue;
      auto& gi = g.grad(in);
      for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i];
    }
  });
}

inline Var sub(Var a, Var b) {
  detail::require_same_graph(a, b, "sub");
  detail::require_same_shape(a, b, "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.graph->record(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Graph& g, NodeId self) {
    const auto& go = g.grad(self);
    if (g.needs_grad(a)) {
      auto& ga = g.grad(a);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (g.needs_grad(b)) {
      auto& gb = g.grad(b);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
    }
  });
}

inline Var mul(Var a, Var b) {
  detail::require_same_graph(a, b, "mul");
  detail::require_same_shape(a, b, "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.graph->record(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Graph& g, NodeId self) {
    const auto& go = g.grad(self);
    if (g.needs_grad(a)) {
      auto& ga = g.grad(a);
      const Tensor& bv = g.value(b);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
    }
    if (g.needs_grad(b)) {
      auto& gb = g.grad(b);
      const Tensor& av = g.value(a);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
    }
  });
}

// scale * x + shift, elementwise.
inline Var affine(Var x, double scale, double shift = 0.0) {
  return detail::unary(
      x, [=](double v) { return scale * v + shift; }, [=](double, double) { return scale; });
}

inline Var scale(Var x, double s) { return affine(x, s, 0.0); }

inline Var square(Var x) {
  return detail::unary(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

// Subgradient 0 at the origin.
inline Var abs(Var x) {
  return detail::unary(
      x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

inline Var sigmoid(Var x) {
  return detail::unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

// log(clamp(x, lo, hi)); zero gradient where the clamp is active.
inline Var log_clamped(Var x, double lo, double hi) {
  return detail::unary(
      x, [=](double v) { return std::log(std::clamp(v, lo, hi)); },
      [=](double v, double) { return (v < lo || v > hi) ? 0.0 : 1.0 / v; });
}

// GELU, tanh approximation:
//   0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
inline constexpr double kGeluSqrt2OverPi = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluCubic = 0.044715;

inline double gelu_value(double v) {
  const double u = kGeluSqrt2OverPi * (v + kGeluCubic * v * v * v);
  return 0.5 * v * (1.0 + std::tanh(u));
}

inline Var gelu(Var x) {
  return detail::unary(x, gelu_value, [](double v, double) {
    const double u = kGeluSqrt2OverPi * (v + kGeluCubic * v * v * v);
    const double t = std::tanh(u);
    const double du = kGeluSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * v * v);
    return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
  });
}

inline Var sum(Var x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.data()) s += v;
  return x.graph->record(Tensor::scalar(s), {x.id}, [x = x.id](Graph& g, NodeId self) {
    if (!g.needs_grad(x)) return;
    const double go = g.grad(self)[0];
    for (auto& gi : g.grad(x)) gi += go;
  });
}

inline Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

// Sum of a list of scalars, each weighted.
inline Var weighted_sum(std::span<const Var> terms, std::span<const double> weights) {
  if (terms.empty() || terms.size() != weights.size()) {
    throw ContractError("weighted_sum: need matching non-empty term and weight lists");
  }
  Graph& g = *terms[0].graph;
  double s = 0.0;
  std::vector<NodeId> ids;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].size() != 1) throw ShapeError("weighted_sum: terms must be scalars");
    s += weights[i] * terms[i].value()[0];
    ids.push_back(terms[i].id);
  }
  std::vector<double> w(weights.begin(), weights.end());
  return g.record(Tensor::scalar(s), ids, [ids, w](Graph& g, NodeId self) {
    const double go = g.grad(self)[0];
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (g.needs_grad(ids[i])) g.grad(ids[i])[0] += go * w[i];
    }
  });
}

inline Var matmul(Var a, Var b) {
  detail::require_same_graph(a, b, "matmul");
  detail::require_matrix(a, "matmul");
  detail::require_matrix(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dimensions disagree " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  Tensor out({m, n});
  detail::gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, n);
  return a.graph->record(std::move(out), {a.id, b.id},
                         [a = a.id, b = b.id, m, k, n](Graph& g, NodeId self) {
                           const auto& go = g.grad(self);
                           if (g.needs_grad(a)) {
                             detail::gemm_nt(go, g.value(b).data(), g.grad(a), m, n, k);
                           }
                           if (g.needs_grad(b)) {
                             detail::gemm_tn(g.value(a).data(), go, g.grad(b), m, k, n);
                           }
                         });
}

inline Var transpose(Var x) {
  detail::require_matrix(x, "transpose");
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  const Tensor& xv = x.value();
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
  return x.graph->record(std::move(out), {x.id}, [x = x.id, r, c](Graph& g, NodeId self) {
    if (!g.needs_grad(x)) return;
    const auto& go = g.grad(self);
    auto& gx = g.grad(x);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += go[j * r + i];
  });
}

// x[.. × N] + bias[N], bias broadcast over all leading positions.
inline Var add_bias(Var x, Var bias) {
  detail::require_same_graph(x, bias, "add_bias");
  const std::size_t n = x.cols();
  if (bias.size() != n) {
    throw ShapeError("add_bias: bias length " + std::to_string(bias.size()) +
                     " does not match last dimension " + std::to_string(n));
  }
  Tensor out = x.value();
  const Tensor& bv = bias.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % n];
  return x.graph->record(std::move(out), {x.id, bias.id},
                         [x = x.id, b = bias.id, n](Graph& g, NodeId self) {
                           const auto& go = g.grad(self);
                           if (g.needs_grad(x)) {
                             auto& gx = g.grad(x);
                             for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
                           }
                           if (g.needs_grad(b)) {
                             auto& gb = g.grad(b);
                             for (std::size_t i = 0; i < go.size(); ++i) gb[i % n] += go[i];
                           }
                         });
}

/// Softmax along `axis`, computed with max subtraction.
inline Var softmax(Var x, std::size_t axis) {
  const Shape& shape = x.shape();
  if (axis >= shape.size()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                     shape_string(shape));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t len = shape[axis];
  const Tensor& xv = x.value();
  Tensor out(shape);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = xv[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, xv[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        const double e = std::exp(xv[base + j * inner] - mx);
        out[base + j * inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= z;
    }
  }
  return x.graph->record(std::move(out), {x.id},
                         [x = x.id, outer, inner, len](Graph& g, NodeId self) {
                           if (!g.needs_grad(x)) return;
                           const auto& go = g.grad(self);
                           const Tensor& y = g.value(self);
                           auto& gx = g.grad(x);
                           for (std::size_t o = 0; o < outer; ++o) {
                             for (std::size_t in = 0; in < inner; ++in) {
                               const std::size_t base = o * len * inner + in;
                               double dot = 0.0;
                               for (std::size_t j = 0; j < len; ++j) {
                                 dot += go[base + j * inner] * y[base + j * inner];
                               }
                               for (std::size_t j = 0; j < len; ++j) {
                                 const std::size_t idx = base + j * inner;
                                 gx[idx] += y[idx] * (go[idx] - dot);
                               }
                             }
                           }
                         });
}

/// Normalizes each row over the last dimension, then applies gain and bias.
inline Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5) {
  detail::require_same_graph(x, gain, "layer_norm");
  detail::require_same_graph(x, bias, "layer_norm");
  const std::size_t n = x.cols();
  if (gain.size() != n || bias.size() != n) {
    throw ShapeError("layer_norm: gain/bias length must equal last dimension " + std::to_string(n));
  }
  const std::size_t rows = x.rows();
  const Tensor& xv = x.value();
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor out(xv.shape());
  // Per-row normalized values and inverse std, kept for the backward pass.
  std::vector<double> xhat(xv.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data().data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (row[j] - mu) * is;
      xhat[r * n + j] = h;
      out[r * n + j] = h * gv[j] + bv[j];
    }
  }
  return x.graph->record(
      std::move(out), {x.id, gain.id, bias.id},
      [x = x.id, gn = gain.id, b = bias.id, n, rows, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Graph& g, NodeId self) {
        const auto& go = g.grad(self);
        if (g.needs_grad(gn)) {
          auto& gg = g.grad(gn);
          for (std::size_t i = 0; i < go.size(); ++i) gg[i % n] += go[i] * xhat[i];
        }
        if (g.needs_grad(b)) {
          auto& gb = g.grad(b);
          for (std::size_t i = 0; i < go.size(); ++i) gb[i % n] += go[i];
        }
        if (!g.needs_grad(x)) return;
        const Tensor& gv = g.value(gn);
        auto& gx = g.grad(x);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_d = 0.0, mean_dh = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double d = go[r * n + j] * gv[j];
            mean_d += d;
            mean_dh += d * xhat[r * n + j];
          }
          mean_d *= inv_n;
          mean_dh *= inv_n;
          for (std::size_t j = 0; j < n; ++j) {
            const double d = go[r * n + j] * gv[j];
            gx[r * n + j] += inv_std[r] * (d - mean_d - xhat[r * n + j] * mean_dh);
          }
        }
      });
}

// Rows of a matrix picked by index (repeats allowed).
inline Var gather_rows(Var x, std::vector<std::size_t> rows) {
  detail::require_matrix(x, "gather_rows");
  if (rows.empty()) throw ShapeError("gather_rows: empty row list");
  const std::size_t c = x.cols();
  const Tensor& xv = x.value();
  Tensor out({rows.size(), c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(xv.data().begin() + static_cast<std::ptrdiff_t>(rows[i] * c), c,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return x.graph->record(std::move(out), {x.id},
                         [x = x.id, rows = std::move(rows), c](Graph& g, NodeId self) {
                           if (!g.needs_grad(x)) return;
                           const auto& go = g.grad(self);
                           auto& gx = g.grad(x);
                           for (std::size_t i = 0; i < rows.size(); ++i)
                             for (std::size_t j = 0; j < c; ++j) gx[rows[i] * c + j] += go[i * c + j];
                         });
}

/// Interleaves the rows of two matrices into a `total`-row matrix: row
/// `a_rows[i]` of the result is row i of `a`, row `b_rows[i]` is row i of `b`.
/// The two index lists must partition [0, total). Either side may be absent
/// (empty index list, `Var{}` operand).
inline Var merge_rows(std::size_t total, Var a, const std::vector<std::size_t>& a_rows, Var b,
                      const std::vector<std::size_t>& b_rows) {
  if (a_rows.size() + b_rows.size() != total || total == 0) {
    throw ShapeError("merge_rows: index lists do not cover the output");
  }
  const bool has_a = !a_rows.empty();
  const bool has_b = !b_rows.empty();
  Graph& g = has_a ? *a.graph : *b.graph;
  const std::size_t c = has_a ? a.cols() : b.cols();
  if (has_a && (a.rows() != a_rows.size() || a.cols() != c)) throw ShapeError("merge_rows: bad a");
  if (has_b && (b.rows() != b_rows.size() || b.cols() != c)) throw ShapeError("merge_rows: bad b");
  if (has_a && has_b) detail::require_same_graph(a, b, "merge_rows");
  Tensor out({total, c});
  std::vector<char> seen(total, 0);
  auto place = [&](Var src, const std::vector<std::size_t>& idx) {
    const Tensor& sv = src.value();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= total || seen[idx[i]]) throw ShapeError("merge_rows: indices must partition rows");
      seen[idx[i]] = 1;
      std::copy_n(sv.data().begin() + static_cast<std::ptrdiff_t>(i * c), c,
                  out.data().begin() + static_cast<std::ptrdiff_t>(idx[i] * c));
    }
  };
  std::vector<NodeId> inputs;
  if (has_a) {
    place(a, a_rows);
    inputs.push_back(a.id);
  }
  if (has_b) {
    place(b, b_rows);
    inputs.push_back(b.id);
  }
  auto scatter_back = [c](Graph& g, NodeId self, NodeId src, const std::vector<std::size_t>& idx) {
    if (!g.needs_grad(src)) return;
    const auto& go = g.grad(self);
    auto& gs = g.grad(src);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) gs[i * c + j] += go[idx[i] * c + j];
  };
  return g.record(std::move(out), inputs,
                  [has_a, has_b, a = a.id, b = b.id, a_rows, b_rows, scatter_back](Graph& g,
                                                                                  NodeId self) {
                    if (has_a) scatter_back(g, self, a, a_rows);
                    if (has_b) scatter_back(g, self, b, b_rows);
                  });
}

// Stacks `count` copies of a single row (a [1×D] or [D] tensor) into [count×D].
inline Var repeat_row(Var row, std::size_t count) {
  if (count == 0) throw ShapeError("repeat_row: count must be positive");
  const std::size_t d = row.size();
  const Tensor& rv = row.value();
  Tensor out({count, d});
  for (std::size_t i = 0; i < count; ++i)
    std::copy(rv.data().begin(), rv.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(i * d));
  return row.graph->record(std::move(out), {row.id}, [r = row.id, d](Graph& g, NodeId self) {
    if (!g.needs_grad(r)) return;
    const auto& go = g.grad(self);
    auto& gr = g.grad(r);
    for (std::size_t i = 0; i < go.size(); ++i) gr[i % d] += go[i];
  });
}

// Columns [begin, end) of a matrix.
inline Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  detail::require_matrix(x, "slice_cols");
  const std::size_t r = x.rows(), c = x.cols();
  if (begin >= end || end > c) throw ShapeError("slice_cols: invalid column range");
  const std::size_t w = end - begin;
  const Tensor& xv = x.value();
  Tensor out({r, w});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = xv[i * c + begin + j];
  return x.graph->record(std::move(out), {x.id}, [x = x.id, r, c, w, begin](Graph& g, NodeId self) {
    if (!g.needs_grad(x)) return;
    const auto& go = g.grad(self);
    auto& gx = g.grad(x);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) gx[i * c + begin + j] += go[i * w + j];
  });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    detail::require_matrix(p, "concat_cols");
    detail::require_same_graph(parts[0], p, "concat_cols");
    if (p.rows() != r) throw ShapeError("concat_cols: row counts differ");
    total += p.cols();
  }
  Tensor out({r, total});
  std::vector<NodeId> ids;
  std::vector<std::size_t> offsets, widths;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Tensor& pv = p.value();
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * total + off + j] = pv[i * w + j];
    ids.push_back(p.id);
    offsets.push_back(off);
    widths.push_back(w);
    off += w;
  }
  return parts[0].graph->record(std::move(out), ids,
                                [ids, offsets, widths, r, total](Graph& g, NodeId self) {
                                  const auto& go = g.grad(self);
                                  for (std::size_t k = 0; k < ids.size(); ++k) {
                                    if (!g.needs_grad(ids[k])) continue;
                                    auto& gp = g.grad(ids[k]);
                                    const std::size_t w = widths[k];
                                    for (std::size_t i = 0; i < r; ++i)
                                      for (std::size_t j = 0; j < w; ++j)
                                        gp[i * w + j] += go[i * total + offsets[k] + j];
                                  }
                                });
}

}  // namespace ebgame::ops
