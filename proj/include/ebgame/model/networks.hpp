#pragma once

// Generator (masked autoencoder) and per-patch discriminator.

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ebgame/errors.hpp"
#include "ebgame/model/patches.hpp"
#include "ebgame/numerics/graph.hpp"
#include "ebgame/numerics/nn.hpp"
#include "ebgame/numerics/ops.hpp"

namespace ebgame::model {

struct ModelConfig {
  std::size_t image_size = 128;
  std::size_t patch_size = 16;
  std::size_t embed_dim = 64;
  std::size_t encoder_depth = 2;
  std::size_t decoder_dim = 32;
  std::size_t decoder_depth = 1;
  std::size_t disc_dim = 32;
  std::size_t disc_depth = 1;
  std::size_t num_heads = 4;
  std::size_t mlp_ratio = 2;

  PatchGrid grid() const { return PatchGrid::create(image_size, image_size, patch_size); }

  void validate() const {
    (void)grid();
    for (auto [name, dim] : {std::pair{"embed_dim", embed_dim}, std::pair{"decoder_dim", decoder_dim},
                             std::pair{"disc_dim", disc_dim}}) {
      if (dim == 0 || dim % 2 != 0) throw ConfigError(std::string(name) + " must be positive and even");
      if (num_heads == 0 || dim % num_heads != 0) {
        throw ConfigError(std::string(name) + " " + std::to_string(dim) + " not divisible by " +
                          std::to_string(num_heads) + " heads");
      }
    }
    if (encoder_depth == 0) throw ConfigError("encoder_depth must be positive");
    if (mlp_ratio == 0) throw ConfigError("mlp_ratio must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct GeneratorParams {
  ModelConfig config;
  nn::Linear patch_embed;
  std::vector<nn::TransformerBlock> encoder_blocks;
  nn::LayerNormParams encoder_norm;
  nn::Linear decoder_embed;
  Tensor mask_token{{1}};
  std::vector<nn::TransformerBlock> decoder_blocks;
  nn::LayerNormParams decoder_norm;
  nn::Linear pixel_head;
  // Fixed tables, not trained.
  Tensor encoder_pos{{1}};
  Tensor decoder_pos{{1}};
};

struct DiscriminatorParams {
  ModelConfig config;
  nn::Linear patch_embed;
  std::vector<nn::TransformerBlock> blocks;
  nn::LayerNormParams norm;
  nn::Linear head;
  Tensor pos{{1}};
};

template <typename G, typename Fn>
  requires nn::ParamsOf<G, GeneratorParams>
void visit(G& p, Fn&& fn) {
  nn::visit(p.patch_embed, "encoder.patch_embed", fn);
  for (std::size_t i = 0; i < p.encoder_blocks.size(); ++i)
    nn::visit(p.encoder_blocks[i], "encoder.block" + std::to_string(i), fn);
  nn::visit(p.encoder_norm, "encoder.norm", fn);
  nn::visit(p.decoder_embed, "decoder.embed", fn);
  fn(std::string("decoder.mask_token"), p.mask_token);
  for (std::size_t i = 0; i < p.decoder_blocks.size(); ++i)
    nn::visit(p.decoder_blocks[i], "decoder.block" + std::to_string(i), fn);
  nn::visit(p.decoder_norm, "decoder.norm", fn);
  nn::visit(p.pixel_head, "decoder.pixel_head", fn);
}

template <typename D, typename Fn>
  requires nn::ParamsOf<D, DiscriminatorParams>
void visit(D& p, Fn&& fn) {
  nn::visit(p.patch_embed, "disc.patch_embed", fn);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) nn::visit(p.blocks[i], "disc.block" + std::to_string(i), fn);
  nn::visit(p.norm, "disc.norm", fn);
  nn::visit(p.head, "disc.head", fn);
}

template <typename P>
std::vector<Tensor*> parameter_list(P& p) {
  std::vector<Tensor*> out;
  visit(p, [&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

template <typename P>
std::size_t parameter_count(const P& p) {
  std::size_t n = 0;
  visit(p, [&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

template <typename P>
void set_trainable(P& p, bool on) {
  visit(p, [&](const std::string&, Tensor& t) { t.set_requires_grad(on); });
}

template <typename P>
void zero_grads(P& p) {
  visit(p, [&](const std::string&, Tensor& t) { t.zero_grad(); });
}

inline GeneratorParams make_generator(const ModelConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const PatchGrid grid = cfg.grid();
  GeneratorParams p;
  p.config = cfg;
  p.patch_embed = nn::make_linear(grid.patch_len(), cfg.embed_dim, rng);
  for (std::size_t i = 0; i < cfg.encoder_depth; ++i)
    p.encoder_blocks.push_back(nn::make_block(cfg.embed_dim, cfg.embed_dim * cfg.mlp_ratio, rng));
  p.encoder_norm = nn::make_layer_norm(cfg.embed_dim);
  p.decoder_embed = nn::make_linear(cfg.embed_dim, cfg.decoder_dim, rng);
  p.mask_token = nn::truncated_normal({cfg.decoder_dim}, 0.02, rng);
  for (std::size_t i = 0; i < cfg.decoder_depth; ++i)
    p.decoder_blocks.push_back(nn::make_block(cfg.decoder_dim, cfg.decoder_dim * cfg.mlp_ratio, rng));
  p.decoder_norm = nn::make_layer_norm(cfg.decoder_dim);
  p.pixel_head = nn::Linear{Tensor({cfg.decoder_dim, grid.patch_len()}, 0.0), Tensor({grid.patch_len()}, 0.0)};
  p.encoder_pos = positional_encoding(grid, cfg.embed_dim);
  p.decoder_pos = positional_encoding(grid, cfg.decoder_dim);
  return p;
}

inline DiscriminatorParams make_discriminator(const ModelConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const PatchGrid grid = cfg.grid();
  DiscriminatorParams p;
  p.config = cfg;
  p.patch_embed = nn::make_linear(grid.patch_len(), cfg.disc_dim, rng);
  for (std::size_t i = 0; i < cfg.disc_depth; ++i)
    p.blocks.push_back(nn::make_block(cfg.disc_dim, cfg.disc_dim * cfg.mlp_ratio, rng));
  p.norm = nn::make_layer_norm(cfg.disc_dim);
  p.head = nn::make_linear(cfg.disc_dim, 1, rng);
  p.pos = positional_encoding(grid, cfg.disc_dim);
  return p;
}

namespace detail {
inline void check_patch_rows(Var x, const std::vector<std::size_t>& positions, const PatchGrid& grid,
                             const char* who) {
  if (x.shape().size() != 2 || x.cols() != grid.patch_len() || x.rows() != positions.size()) {
    throw ShapeError(std::string(who) + ": expected " + std::to_string(positions.size()) + " patches of " +
                     std::to_string(grid.patch_len()) + " pixels, got " + shape_string(x.shape()));
  }
  for (auto k : positions)
    if (k >= grid.num_patches()) throw ShapeError(std::string(who) + ": patch position out of range");
}
}  // namespace detail

/// Encoder: embeds the visible patches, adds their positional rows and runs
/// the encoder blocks. `visible` is [V × P²]; `positions` are grid indices.
/// Returns the latent [V × embed_dim].
template <typename G>
  requires nn::ParamsOf<G, GeneratorParams>
Var encode(Graph& g, G& p, Var visible, const std::vector<std::size_t>& positions) {
  detail::check_patch_rows(visible, positions, p.config.grid(), "encode");
  Var x = nn::linear(g, p.patch_embed, visible);
  x = ops::add(x, ops::gather_rows(g.parameter(std::as_const(p.encoder_pos)), positions));
  for (auto& blk : p.encoder_blocks) x = nn::transformer_block(g, blk, x, p.config.num_heads);
  return nn::layer_norm(g, p.encoder_norm, x);
}

struct Reconstruction {
  Var predicted;                  // [N × P²] decoder output at every slot
  std::optional<Var> masked;      // [|M| × P²] predictions at the masked slots
  Var composed;                   // [N × P²] originals at visible slots, predictions at masked ones
};

/// Decoder: projects the latent, fills masked slots with the mask token, adds
/// positions, runs the decoder blocks and maps every slot to pixels.
template <typename G>
  requires nn::ParamsOf<G, GeneratorParams>
Reconstruction decode(Graph& g, G& p, Var latent, const MaskSet& mask, Var original) {
  const PatchGrid grid = p.config.grid();
  const std::size_t n = grid.num_patches();
  if (!(mask.grid == grid)) throw ShapeError("decode: mask grid does not match the model");
  if (original.shape().size() != 2 || original.rows() != n || original.cols() != grid.patch_len()) {
    throw ShapeError("decode: original must be [" + std::to_string(n) + " x " + std::to_string(grid.patch_len()) + "]");
  }
  if (mask.visible.empty()) throw ContractError("decode: no visible patches");
  if (latent.graph == nullptr || latent.rows() != mask.visible.size() || latent.cols() != p.config.embed_dim) {
    throw ShapeError("decode: latent does not match the visible patch set");
  }
  const bool has_masked = !mask.masked.empty();
  const Var y = nn::linear(g, p.decoder_embed, latent);
  Var tokens_m{};
  if (has_masked) tokens_m = ops::repeat_row(g.parameter(p.mask_token), mask.masked.size());
  Var x = ops::merge_rows(n, y, mask.visible, tokens_m, mask.masked);
  x = ops::add(x, g.parameter(std::as_const(p.decoder_pos)));
  for (auto& blk : p.decoder_blocks) x = nn::transformer_block(g, blk, x, p.config.num_heads);
  x = nn::layer_norm(g, p.decoder_norm, x);
  Reconstruction rec;
  rec.predicted = nn::linear(g, p.pixel_head, x);
  if (has_masked) {
    rec.masked = ops::gather_rows(rec.predicted, mask.masked);
    rec.composed = ops::merge_rows(n, ops::gather_rows(original, mask.visible), mask.visible, *rec.masked, mask.masked);
  } else {
    rec.composed = original;
  }
  return rec;
}

// Full generator pass for one patch sequence under one mask.
template <typename G>
  requires nn::ParamsOf<G, GeneratorParams>
Reconstruction generate(Graph& g, G& p, const PatchSeq& seq, const MaskSet& mask) {
  if (mask.visible.empty()) throw ContractError("generate: mask leaves no visible patches");
  const Var original = g.constant(seq.patches);
  const Var latent = encode(g, p, ops::gather_rows(original, mask.visible), mask.visible);
  return decode(g, p, latent, mask, original);
}

/// Discriminator: per-patch probability of being real. `patches` is
/// [n × P²] at grid `positions`; returns [n × 1] in (0, 1).
template <typename D>
  requires nn::ParamsOf<D, DiscriminatorParams>
Var discriminate(Graph& g, D& p, Var patches, const std::vector<std::size_t>& positions) {
  detail::check_patch_rows(patches, positions, p.config.grid(), "discriminate");
  Var x = nn::linear(g, p.patch_embed, patches);
  x = ops::add(x, ops::gather_rows(g.parameter(std::as_const(p.pos)), positions));
  for (auto& blk : p.blocks) x = nn::transformer_block(g, blk, x, p.config.num_heads);
  x = nn::layer_norm(g, p.norm, x);
  return ops::sigmoid(nn::linear(g, p.head, x));
}

// Composite image X̃ as an [H × W] tensor.
inline Tensor composed_image(const Reconstruction& rec, const PatchGrid& grid) {
  return unpatchify(PatchSeq{grid, rec.composed.value()});
}

}  // namespace ebgame::model
