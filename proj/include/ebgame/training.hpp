#pragma once

// Reconstruction, adversarial and contextual losses plus the alternating
// generator/discriminator training loop.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ebgame/beats.hpp"
#include "ebgame/errors.hpp"
#include "ebgame/model.hpp"
#include "ebgame/numerics.hpp"

namespace ebgame::training {

inline constexpr double kProbClampLo = 1e-7;
inline constexpr double kProbClampHi = 1.0 - 1e-7;

// Mean squared error over the masked pixels: sum / (|M| * P²).
inline Var loss_mae(Graph& g, const model::PatchSeq& original, Var predicted_masked, const model::MaskSet& mask) {
  if (mask.masked.empty()) throw ContractError("loss_mae: empty mask");
  if (predicted_masked.rows() != mask.masked.size() || predicted_masked.cols() != original.grid.patch_len()) {
    throw ShapeError("loss_mae: prediction shape " + shape_string(predicted_masked.shape()) +
                     " does not match the mask");
  }
  const Var target = ops::gather_rows(g.constant(original.patches), mask.masked);
  return ops::mean(ops::square(ops::sub(predicted_masked, target)));
}

// Mean absolute pixel difference between X and X̃.
inline Var loss_con(Var original, Var reconstructed) {
  if (original.shape() != reconstructed.shape()) {
    throw ShapeError("loss_con: shapes " + shape_string(original.shape()) + " and " +
                     shape_string(reconstructed.shape()) + " differ");
  }
  return ops::mean(ops::abs(ops::sub(original, reconstructed)));
}

// -mean(log d_real) - mean(log(1 - d_fake)), probabilities clamped.
inline Var loss_adv_discriminator(Var d_real, Var d_fake) {
  const Var real_term = ops::mean(ops::log_clamped(d_real, kProbClampLo, kProbClampHi));
  const Var fake_term = ops::mean(ops::log_clamped(ops::affine(d_fake, -1.0, 1.0), kProbClampLo, kProbClampHi));
  return ops::scale(ops::add(real_term, fake_term), -1.0);
}

// Non-saturating generator term: -mean(log d_fake).
inline Var loss_adv_generator(Var d_fake) {
  return ops::scale(ops::mean(ops::log_clamped(d_fake, kProbClampLo, kProbClampHi)), -1.0);
}

struct LossWeights {
  double gamma_adv = 0.01;
  double gamma_con = 1.0;
};

inline Var loss_total(Var l_mae, Var l_adv_g, Var l_con, const LossWeights& w) {
  if (w.gamma_adv < 0.0 || w.gamma_con < 0.0) throw ConfigError("loss weights must be non-negative");
  const Var terms[] = {l_mae, l_adv_g, l_con};
  const double weights[] = {1.0, w.gamma_adv, w.gamma_con};
  return ops::weighted_sum(terms, weights);
}

struct LossBundle {
  double l_mae = 0.0;
  double l_adv_d = 0.0;
  double l_adv_g = 0.0;
  double l_con = 0.0;
  double l_total = 0.0;
  double gamma_adv = 0.0;
  double gamma_con = 0.0;
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double base_lr = 1e-3;
  std::size_t warmup_steps = 40;
  double weight_decay = 0.05;
  double mask_ratio = 0.3;
  model::MaskSampling mask_sampling = model::MaskSampling::truncated_normal;
  double mask_sigma_fraction = 1.0 / 6.0;
  double gamma_adv = 0.01;
  double gamma_con = 1.0;
  double disc_lr = 1e-3;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
    if (disc_lr < 0.0) throw ConfigError("disc_lr must be non-negative");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (gamma_adv < 0.0 || gamma_con < 0.0) throw ConfigError("loss weights must be non-negative");
    if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) {
      throw ConfigError("mask_ratio must lie in (0,1) for training, got " + std::to_string(mask_ratio));
    }
    if (!(mask_sigma_fraction > 0.0)) throw ConfigError("mask_sigma_fraction must be positive");
  }

  model::MaskOptions mask_options() const {
    return model::MaskOptions{mask_ratio, mask_sampling, mask_sigma_fraction};
  }
};

// Independent, reproducible RNG stream per purpose.
enum class Stream : std::uint64_t { init = 1, shuffle = 2, mask = 3, score = 4 };

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  return std::mt19937_64(seq);
}

inline model::PatchSeq patchify_image(const beats::BeatImage& img, const model::PatchGrid& grid) {
  return model::patchify(img.pixels(), grid);
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double l_mae = 0.0;
  double l_adv_d = 0.0;
  double l_adv_g = 0.0;
  double l_con = 0.0;
  double l_total = 0.0;
  double lr = 0.0;  // generator learning rate at the epoch's last step
};

/// Owns both networks and their optimizers. One call to step() runs a
/// discriminator update followed by a generator update on one batch.
class Trainer {
 public:
  Trainer(const model::ModelConfig& mcfg, const TrainConfig& cfg, std::size_t steps_total)
      : cfg_(cfg), grid_(mcfg.grid()) {
    cfg_.validate();
    auto init = make_stream(cfg.seed, Stream::init);
    gen_ = model::make_generator(mcfg, init);
    disc_ = model::make_discriminator(mcfg, init);
    model::set_trainable(gen_, true);
    model::set_trainable(disc_, true);
    AdamWHyperparams hp;
    hp.weight_decay = cfg.weight_decay;
    opt_g_ = AdamW(hp);
    opt_d_ = AdamW(hp);
    const std::size_t total = std::max<std::size_t>(steps_total, 1);
    // A warm-up as long as the run would never leave it; cap it.
    const std::size_t warmup = std::min(cfg.warmup_steps, total - 1);
    sched_g_ = LrSchedule(cfg.base_lr, warmup, total);
    if (cfg.disc_lr > 0.0) sched_d_ = LrSchedule(cfg.disc_lr, warmup, total);
    mask_rng_ = make_stream(cfg.seed, Stream::mask);
  }

  const model::GeneratorParams& generator() const noexcept { return gen_; }
  const model::DiscriminatorParams& discriminator() const noexcept { return disc_; }
  model::GeneratorParams& generator() noexcept { return gen_; }
  model::DiscriminatorParams& discriminator() noexcept { return disc_; }
  std::size_t steps_taken() const noexcept { return step_; }
  double generator_lr() const { return sched_g_.at(std::min(step_, sched_g_.total_steps)); }

  // Forward state of one batch: one tape per image.
  struct Batch {
    std::vector<const model::PatchSeq*> seqs;
    std::vector<model::MaskSet> masks;
    std::vector<std::unique_ptr<Graph>> graphs;
    std::vector<model::Reconstruction> recs;
  };

  // Samples a fresh mask per image and runs the generator forward.
  Batch forward(std::span<const model::PatchSeq* const> seqs) {
    if (seqs.empty()) throw ContractError("trainer: empty batch");
    Batch b;
    for (const auto* s : seqs) {
      b.seqs.push_back(s);
      b.masks.push_back(model::sample_wave_mask(grid_, cfg_.mask_options(), mask_rng_));
      b.graphs.push_back(std::make_unique<Graph>());
      b.recs.push_back(model::generate(*b.graphs.back(), gen_, *s, b.masks.back()));
    }
    return b;
  }

  // Discriminator update on real visible patches vs detached reconstructions.
  // Returns the batch-mean discriminator loss.
  double discriminator_step(const Batch& b, double lr) {
    model::zero_grads(disc_);
    const double inv = 1.0 / static_cast<double>(b.seqs.size());
    double total = 0.0;
    for (std::size_t i = 0; i < b.seqs.size(); ++i) {
      Graph g;
      const auto& mask = b.masks[i];
      const Var real = ops::gather_rows(g.constant(b.seqs[i]->patches), mask.visible);
      const Var fake = g.constant(b.recs[i].masked->value());
      const Var d_real = model::discriminate(g, disc_, real, mask.visible);
      const Var d_fake = model::discriminate(g, disc_, fake, mask.masked);
      const Var loss = loss_adv_discriminator(d_real, d_fake);
      total += loss.value().item();
      g.backward(ops::scale(loss, inv));
    }
    opt_d_.step(model::parameter_list(disc_), lr);
    return total * inv;
  }

  // Generator update on the total loss with the discriminator frozen.
  LossBundle generator_step(Batch& b, double lr) {
    model::zero_grads(gen_);
    const double inv = 1.0 / static_cast<double>(b.seqs.size());
    const LossWeights w{cfg_.gamma_adv, cfg_.gamma_con};
    LossBundle sum;
    for (std::size_t i = 0; i < b.seqs.size(); ++i) {
      Graph& g = *b.graphs[i];
      const auto& mask = b.masks[i];
      const auto& rec = b.recs[i];
      const Var mae = loss_mae(g, *b.seqs[i], *rec.masked, mask);
      const Var d_fake = model::discriminate(g, std::as_const(disc_), *rec.masked, mask.masked);
      const Var adv = loss_adv_generator(d_fake);
      const Var con = loss_con(g.constant(b.seqs[i]->patches), rec.composed);
      const Var total = loss_total(mae, adv, con, w);
      sum.l_mae += mae.value().item();
      sum.l_adv_g += adv.value().item();
      sum.l_con += con.value().item();
      sum.l_total += total.value().item();
      g.backward(ops::scale(total, inv));
    }
    opt_g_.step(model::parameter_list(gen_), lr);
    sum.l_mae *= inv;
    sum.l_adv_g *= inv;
    sum.l_con *= inv;
    sum.l_total *= inv;
    sum.gamma_adv = w.gamma_adv;
    sum.gamma_con = w.gamma_con;
    return sum;
  }

  // Full alternating step on one batch; advances the schedule.
  LossBundle step(std::span<const model::PatchSeq* const> seqs) {
    const double lr_g = sched_g_.at(step_);
    const double lr_d = cfg_.disc_lr > 0.0 ? sched_d_.at(step_) : 0.0;
    Batch b = forward(seqs);
    const double l_adv_d = discriminator_step(b, lr_d);
    LossBundle out = generator_step(b, lr_g);
    out.l_adv_d = l_adv_d;
    last_lr_ = lr_g;
    ++step_;
    return out;
  }

  double last_lr() const noexcept { return last_lr_; }

 private:
  TrainConfig cfg_;
  model::PatchGrid grid_;
  model::GeneratorParams gen_;
  model::DiscriminatorParams disc_;
  AdamW opt_g_;
  AdamW opt_d_;
  LrSchedule sched_g_;
  LrSchedule sched_d_;
  std::mt19937_64 mask_rng_;
  std::size_t step_ = 0;
  double last_lr_ = 0.0;
};

struct TrainResult {
  model::GeneratorParams generator;
  model::DiscriminatorParams discriminator;
  std::vector<EpochRecord> history;
};

inline std::size_t batches_per_epoch(std::size_t n, std::size_t batch_size) {
  return (n + batch_size - 1) / batch_size;
}

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains on normal beats only. Each epoch reshuffles, and every image gets a
/// fresh mask each time it is visited. Epoch losses are means over images.
inline TrainResult train(std::span<const beats::BeatImage> data, const model::ModelConfig& mcfg,
                         const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  mcfg.validate();
  if (data.empty()) throw ContractError("train: empty training set");
  for (const auto& img : data) {
    if (img.aami_class() != beats::AamiClass::N) {
      throw ContractError("train: non-N beat in training set (record " + img.record_id() + ", sample " +
                          std::to_string(img.r_index()) + ")");
    }
  }
  const model::PatchGrid grid = mcfg.grid();
  if (grid.image_h != beats::kImageSize || grid.image_w != beats::kImageSize) {
    throw ConfigError("model image_size does not match beat images");
  }
  std::vector<model::PatchSeq> seqs;
  seqs.reserve(data.size());
  for (const auto& img : data) seqs.push_back(patchify_image(img, grid));

  const std::size_t per_epoch = batches_per_epoch(seqs.size(), cfg.batch_size);
  Trainer trainer(mcfg, cfg, per_epoch * cfg.epochs);
  auto shuffle_rng = make_stream(cfg.seed, Stream::shuffle);
  std::vector<std::size_t> order(seqs.size());
  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const model::PatchSeq*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&seqs[order[i]]);
      const LossBundle l = trainer.step(batch);
      const double w = static_cast<double>(end - start);
      rec.l_mae += l.l_mae * w;
      rec.l_adv_d += l.l_adv_d * w;
      rec.l_adv_g += l.l_adv_g * w;
      rec.l_con += l.l_con * w;
      rec.l_total += l.l_total * w;
    }
    const double n = static_cast<double>(order.size());
    rec.l_mae /= n;
    rec.l_adv_d /= n;
    rec.l_adv_g /= n;
    rec.l_con /= n;
    rec.l_total /= n;
    rec.lr = trainer.last_lr();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.generator = std::move(trainer.generator());
  result.discriminator = std::move(trainer.discriminator());
  model::set_trainable(result.generator, false);
  model::set_trainable(result.discriminator, false);
  return result;
}

// Shortest decimal text that round-trips the double.
inline std::string format_real(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_loss_history(std::ostream& os, std::span<const EpochRecord> history) {
  os << "epoch,l_mae,l_adv_d,l_adv_g,l_con,l_total,lr\n";
  for (const auto& r : history) {
    os << r.epoch << ',' << format_real(r.l_mae) << ',' << format_real(r.l_adv_d) << ','
       << format_real(r.l_adv_g) << ',' << format_real(r.l_con) << ',' << format_real(r.l_total) << ','
       << format_real(r.lr) << '\n';
  }
}

}  // namespace ebgame::training
