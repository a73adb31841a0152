#pragma once

// Neural building blocks over the autodiff tape: affine layers, layer norm,
// multi-head attention, and the pre-norm transformer block.
//
// Parameter structs are plain aggregates of Tensors. Forward functions are
// templated on the parameter struct's constness: a mutable struct whose
// tensors require grad is trained, a const one is read-only in the graph.

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#include "ebgame/errors.hpp"
#include "ebgame/numerics/graph.hpp"
#include "ebgame/numerics/ops.hpp"
#include "ebgame/numerics/tensor.hpp"

namespace ebgame::nn {

template <typename P, typename T>
concept ParamsOf = std::is_same_v<std::remove_const_t<P>, T>;

struct Linear {
  Tensor weight;  // [in × out]
  Tensor bias;    // [out]
};

struct LayerNormParams {
  Tensor gain;
  Tensor bias;
};

struct Attention {
  Linear query, key, value, out;
};

struct Mlp {
  Linear fc1, fc2;
};

struct TransformerBlock {
  LayerNormParams norm1;
  Attention attn;
  LayerNormParams norm2;
  Mlp mlp;
};

// Visitors enumerate parameters in a fixed order with stable dotted names.
// The order drives optimizer state layout and checkpoint layout.
template <typename L, typename Fn>
  requires ParamsOf<L, Linear>
void visit(L& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".weight", p.weight);
  fn(prefix + ".bias", p.bias);
}

template <typename L, typename Fn>
  requires ParamsOf<L, LayerNormParams>
void visit(L& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".gain", p.gain);
  fn(prefix + ".bias", p.bias);
}

template <typename A, typename Fn>
  requires ParamsOf<A, Attention>
void visit(A& p, const std::string& prefix, Fn&& fn) {
  visit(p.query, prefix + ".query", fn);
  visit(p.key, prefix + ".key", fn);
  visit(p.value, prefix + ".value", fn);
  visit(p.out, prefix + ".out", fn);
}

template <typename M, typename Fn>
  requires ParamsOf<M, Mlp>
void visit(M& p, const std::string& prefix, Fn&& fn) {
  visit(p.fc1, prefix + ".fc1", fn);
  visit(p.fc2, prefix + ".fc2", fn);
}

template <typename B, typename Fn>
  requires ParamsOf<B, TransformerBlock>
void visit(B& p, const std::string& prefix, Fn&& fn) {
  visit(p.norm1, prefix + ".norm1", fn);
  visit(p.attn, prefix + ".attn", fn);
  visit(p.norm2, prefix + ".norm2", fn);
  visit(p.mlp, prefix + ".mlp", fn);
}

// Normal(0, std) truncated to ±2 std, by rejection.
inline Tensor truncated_normal(Shape shape, double std, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& v : t.data()) {
    double z = dist(rng);
    while (std::abs(z) > 2.0) z = dist(rng);
    v = z * std;
  }
  return t;
}

inline Linear make_linear(std::size_t in, std::size_t out, std::mt19937_64& rng,
                          double std = 0.02) {
  return Linear{truncated_normal({in, out}, std, rng), Tensor({out}, 0.0)};
}

inline LayerNormParams make_layer_norm(std::size_t dim) {
  return LayerNormParams{Tensor({dim}, 1.0), Tensor({dim}, 0.0)};
}

inline TransformerBlock make_block(std::size_t dim, std::size_t mlp_hidden, std::mt19937_64& rng) {
  TransformerBlock b;
  b.norm1 = make_layer_norm(dim);
  b.attn.query = make_linear(dim, dim, rng);
  b.attn.key = make_linear(dim, dim, rng);
  b.attn.value = make_linear(dim, dim, rng);
  b.attn.out = make_linear(dim, dim, rng);
  b.norm2 = make_layer_norm(dim);
  b.mlp.fc1 = make_linear(dim, mlp_hidden, rng);
  b.mlp.fc2 = make_linear(mlp_hidden, dim, rng);
  return b;
}

template <typename L>
  requires ParamsOf<L, Linear>
Var linear(Graph& g, L& p, Var x) {
  return ops::add_bias(ops::matmul(x, g.parameter(p.weight)), g.parameter(p.bias));
}

template <typename L>
  requires ParamsOf<L, LayerNormParams>
Var layer_norm(Graph& g, L& p, Var x, double eps = 1e-5) {
  return ops::layer_norm(x, g.parameter(p.gain), g.parameter(p.bias), eps);
}

/// Multi-head scaled dot-product attention.
///
/// q is [Lq × D], k and v are [Lk × D]. Each head attends over its own
/// D/num_heads slice with scale 1/sqrt(head_dim); head outputs are
/// concatenated and passed through the output projection. The result has
/// the shape of q.
template <typename A>
  requires ParamsOf<A, Attention>
Var multi_head_attention(Graph& g, A& p, Var q, Var k, Var v, std::size_t num_heads) {
  const std::size_t dim = q.cols();
  if (num_heads == 0 || dim % num_heads != 0) {
    throw ConfigError("multi_head_attention: embedding dim " + std::to_string(dim) +
                      " not divisible by " + std::to_string(num_heads) + " heads");
  }
  if (k.rows() != v.rows()) throw ShapeError("multi_head_attention: key/value lengths differ");
  if (k.cols() != dim || v.cols() != dim) throw ShapeError("multi_head_attention: width mismatch");
  const Var qp = linear(g, p.query, q);
  const Var kp = linear(g, p.key, k);
  const Var vp = linear(g, p.value, v);
  const std::size_t hd = dim / num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  std::vector<Var> heads;
  heads.reserve(num_heads);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const Var qh = num_heads == 1 ? qp : ops::slice_cols(qp, h * hd, (h + 1) * hd);
    const Var kh = num_heads == 1 ? kp : ops::slice_cols(kp, h * hd, (h + 1) * hd);
    const Var vh = num_heads == 1 ? vp : ops::slice_cols(vp, h * hd, (h + 1) * hd);
    const Var scores = ops::scale(ops::matmul(qh, ops::transpose(kh)), scale);
    heads.push_back(ops::matmul(ops::softmax(scores, 1), vh));
  }
  const Var merged = num_heads == 1 ? heads[0] : ops::concat_cols(heads);
  return linear(g, p.out, merged);
}

template <typename M>
  requires ParamsOf<M, Mlp>
Var mlp(Graph& g, M& p, Var x) {
  return linear(g, p.fc2, ops::gelu(linear(g, p.fc1, x)));
}

// Pre-norm block: x + attn(ln(x)), then x + mlp(ln(x)).
template <typename B>
  requires ParamsOf<B, TransformerBlock>
Var transformer_block(Graph& g, B& p, Var x, std::size_t num_heads, double eps = 1e-5) {
  const Var h = layer_norm(g, p.norm1, x, eps);
  x = ops::add(x, multi_head_attention(g, p.attn, h, h, h, num_heads));
  return ops::add(x, mlp(g, p.mlp, layer_norm(g, p.norm2, x, eps)));
}

}  // namespace ebgame::nn
