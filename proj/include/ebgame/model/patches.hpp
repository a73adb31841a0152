#pragma once

// Patch tiling, the column-wise wave mask, and fixed 2-D positional tables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ebgame/errors.hpp"
#include "ebgame/numerics/tensor.hpp"

namespace ebgame::model {

struct PatchGrid {
  std::size_t image_h = 128;
  std::size_t image_w = 128;
  std::size_t patch_size = 16;

  static PatchGrid create(std::size_t h, std::size_t w, std::size_t p) {
    if (p == 0 || h == 0 || w == 0 || h % p != 0 || w % p != 0) {
      throw ConfigError("patch size " + std::to_string(p) + " does not divide image " + std::to_string(h) +
                        "x" + std::to_string(w));
    }
    return PatchGrid{h, w, p};
  }

  std::size_t rows() const noexcept { return image_h / patch_size; }
  std::size_t cols() const noexcept { return image_w / patch_size; }
  std::size_t num_patches() const noexcept { return rows() * cols(); }
  std::size_t patch_len() const noexcept { return patch_size * patch_size; }

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

// Patches in row-major grid order: index k is grid cell (k / cols, k % cols).
// Each row of `patches` is one P×P tile flattened row-major.
struct PatchSeq {
  PatchGrid grid;
  Tensor patches;  // [N × P²]
};

inline PatchSeq patchify(std::span<const double> image, const PatchGrid& grid) {
  (void)PatchGrid::create(grid.image_h, grid.image_w, grid.patch_size);
  if (image.size() != grid.image_h * grid.image_w) {
    throw ShapeError("patchify: image has " + std::to_string(image.size()) + " pixels, grid expects " +
                     std::to_string(grid.image_h * grid.image_w));
  }
  const std::size_t p = grid.patch_size, cols = grid.cols();
  Tensor out({grid.num_patches(), grid.patch_len()});
  for (std::size_t k = 0; k < grid.num_patches(); ++k) {
    const std::size_t r0 = (k / cols) * p, c0 = (k % cols) * p;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) out[k * p * p + i * p + j] = image[(r0 + i) * grid.image_w + c0 + j];
  }
  return PatchSeq{grid, std::move(out)};
}

// Inverse of patchify; returns an [H × W] tensor.
inline Tensor unpatchify(const PatchSeq& seq) {
  const PatchGrid& grid = seq.grid;
  if (seq.patches.rank() != 2 || seq.patches.dim(0) != grid.num_patches() ||
      seq.patches.dim(1) != grid.patch_len()) {
    throw ShapeError("unpatchify: expected " + std::to_string(grid.num_patches()) + " patches of " +
                     std::to_string(grid.patch_len()) + " pixels, got " + shape_string(seq.patches.shape()));
  }
  const std::size_t p = grid.patch_size, cols = grid.cols();
  Tensor img({grid.image_h, grid.image_w});
  for (std::size_t k = 0; k < grid.num_patches(); ++k) {
    const std::size_t r0 = (k / cols) * p, c0 = (k % cols) * p;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) img[(r0 + i) * grid.image_w + c0 + j] = seq.patches[k * p * p + i * p + j];
  }
  return img;
}

enum class MaskSampling { truncated_normal, uniform };

struct MaskOptions {
  double ratio = 0.3;
  MaskSampling sampling = MaskSampling::truncated_normal;
  // Standard deviation of the index draw as a fraction of the patch count.
  double sigma_fraction = 1.0 / 6.0;
};

/// Wave mask over a patch grid.
///   seed_patches  grid cells drawn by the sampler, in draw order (no repeats)
///   columns       grid columns hit by a seed patch, ascending
///   masked        every patch index in those columns, ascending
///   visible       the remaining patch indices, ascending
struct MaskSet {
  PatchGrid grid;
  std::vector<std::pair<std::size_t, std::size_t>> seed_patches;
  std::vector<std::size_t> columns;
  std::vector<std::size_t> masked;
  std::vector<std::size_t> visible;

  bool is_masked(std::size_t k) const { return std::binary_search(masked.begin(), masked.end(), k); }
};

// Number of masked columns for a ratio: round(ratio * cols), at least one
// column when ratio > 0.
inline std::size_t masked_column_count(std::size_t cols, double ratio) {
  if (ratio <= 0.0) return 0;
  const auto k = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(cols)));
  return std::clamp<std::size_t>(k, 1, cols);
}

// Expands a column set into the full mask (whole grid columns).
inline MaskSet mask_from_columns(const PatchGrid& grid, std::vector<std::size_t> columns,
                                 std::vector<std::pair<std::size_t, std::size_t>> seeds = {}) {
  std::sort(columns.begin(), columns.end());
  columns.erase(std::unique(columns.begin(), columns.end()), columns.end());
  MaskSet m;
  m.grid = grid;
  m.seed_patches = std::move(seeds);
  m.columns = std::move(columns);
  for (std::size_t k = 0; k < grid.num_patches(); ++k) {
    const std::size_t c = k % grid.cols();
    if (std::binary_search(m.columns.begin(), m.columns.end(), c)) {
      m.masked.push_back(k);
    } else {
      m.visible.push_back(k);
    }
  }
  return m;
}

/// Samples a wave mask.
///
/// Patch indices 1..N are drawn (normal centred at (N+1)/2 with std
/// N*sigma_fraction, rejected outside [1, N]; or uniform) until the drawn
/// patches touch the target number of distinct columns. Indices enumerate the
/// grid column by column, so the bell of the draw lands on the central
/// columns where the waveform lives. Every drawn patch's column is masked
/// top to bottom.
inline MaskSet sample_wave_mask(const PatchGrid& grid, const MaskOptions& opt, std::mt19937_64& rng) {
  if (!(opt.ratio >= 0.0 && opt.ratio <= 1.0)) {
    throw ConfigError("mask ratio must lie in [0,1], got " + std::to_string(opt.ratio));
  }
  const std::size_t n = grid.num_patches(), rows = grid.rows();
  const std::size_t target = masked_column_count(grid.cols(), opt.ratio);
  const double mu = (static_cast<double>(n) + 1.0) / 2.0;
  const double sigma = static_cast<double>(n) * opt.sigma_fraction;
  std::normal_distribution<double> normal(mu, sigma > 0.0 ? sigma : 1.0);
  std::uniform_int_distribution<std::size_t> uniform(1, n);
  std::vector<std::pair<std::size_t, std::size_t>> seeds;
  std::vector<std::size_t> columns;
  while (columns.size() < target) {
    std::size_t idx;
    if (opt.sampling == MaskSampling::uniform) {
      idx = uniform(rng);
    } else {
      const double x = std::round(normal(rng));
      if (x < 1.0 || x > static_cast<double>(n)) continue;
      idx = static_cast<std::size_t>(x);
    }
    const std::pair<std::size_t, std::size_t> cell{(idx - 1) % rows, (idx - 1) / rows};
    if (std::find(seeds.begin(), seeds.end(), cell) == seeds.end()) seeds.push_back(cell);
    if (std::find(columns.begin(), columns.end(), cell.second) == columns.end()) columns.push_back(cell.second);
  }
  return mask_from_columns(grid, std::move(columns), std::move(seeds));
}

inline MaskSet sample_wave_mask(const PatchGrid& grid, double ratio, std::mt19937_64& rng) {
  MaskOptions opt;
  opt.ratio = ratio;
  return sample_wave_mask(grid, opt, rng);
}

// A subset of the patches of a sequence; `pixels` is |indices| × P² row-major.
struct PatchSubset {
  std::vector<std::size_t> indices;
  std::vector<double> pixels;
  std::size_t patch_len = 0;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
  Tensor as_tensor() const {
    if (indices.empty()) throw ShapeError("empty patch subset has no tensor form");
    return Tensor({indices.size(), patch_len}, pixels);
  }
};

struct Partition {
  PatchSubset visible;
  PatchSubset masked;
};

inline Partition partition_patches(const PatchSeq& seq, const MaskSet& mask) {
  if (!(seq.grid == mask.grid)) throw ShapeError("partition_patches: mask grid does not match sequence grid");
  const std::size_t len = seq.grid.patch_len();
  Partition part;
  part.visible.patch_len = part.masked.patch_len = len;
  for (std::size_t k = 0; k < seq.grid.num_patches(); ++k) {
    PatchSubset& dst = mask.is_masked(k) ? part.masked : part.visible;
    dst.indices.push_back(k);
    const auto row = seq.patches.data().subspan(k * len, len);
    dst.pixels.insert(dst.pixels.end(), row.begin(), row.end());
  }
  return part;
}

/// Fixed 2-D sinusoidal table [N × dim]: the first dim/2 entries encode the
/// patch row, the last dim/2 the patch column. Within each half entry 2i is
/// sin(pos / 10000^(2i/half)) and entry 2i+1 the matching cos.
inline Tensor positional_encoding(const PatchGrid& grid, std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) throw ConfigError("positional encoding dim must be even, got " + std::to_string(dim));
  const std::size_t half = dim / 2;
  Tensor table({grid.num_patches(), dim});
  for (std::size_t k = 0; k < grid.num_patches(); ++k) {
    const double pos[2] = {static_cast<double>(k / grid.cols()), static_cast<double>(k % grid.cols())};
    for (std::size_t part = 0; part < 2; ++part) {
      for (std::size_t j = 0; j < half; ++j) {
        const double freq = std::pow(10000.0, -static_cast<double>(2 * (j / 2)) / static_cast<double>(half));
        const double angle = pos[part] * freq;
        table[k * dim + part * half + j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
      }
    }
  }
  return table;
}

}  // namespace ebgame::model
