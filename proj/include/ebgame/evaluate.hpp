#pragma once

// Anomaly scoring, threshold selection and binary detection metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ebgame/beats.hpp"
#include "ebgame/errors.hpp"
#include "ebgame/model.hpp"
#include "ebgame/training.hpp"

namespace ebgame::evaluate {

struct ScoredBeat {
  std::string source_id;
  beats::AamiClass true_class = beats::AamiClass::N;
  double score = 0.0;

  bool is_anomalous() const noexcept { return true_class != beats::AamiClass::N; }
};

struct ScoreOptions {
  std::size_t k_draws = 8;
  model::MaskOptions mask;
  double gamma_con = 1.0;
  std::uint64_t seed = 0;
};

/// Mean over k_draws fresh masks of the masked-pixel MSE plus gamma_con times
/// the whole-image L1 between X and X̃.
inline double anomaly_score(const model::PatchSeq& seq, const model::GeneratorParams& gen, std::size_t k_draws,
                            std::mt19937_64& rng, const model::MaskOptions& mask_opt, double gamma_con) {
  if (k_draws < 1) throw ConfigError("k_draws must be at least 1");
  if (!(seq.grid == gen.config.grid())) throw ShapeError("anomaly_score: image grid does not match the model");
  double total = 0.0;
  for (std::size_t d = 0; d < k_draws; ++d) {
    const model::MaskSet mask = model::sample_wave_mask(seq.grid, mask_opt, rng);
    Graph g;
    const auto rec = model::generate(g, gen, seq, mask);
    const double mae = training::loss_mae(g, seq, *rec.masked, mask).value().item();
    const double con = training::loss_con(g.constant(seq.patches), rec.composed).value().item();
    total += mae + gamma_con * con;
  }
  return total / static_cast<double>(k_draws);
}

inline std::string source_id(const beats::BeatImage& img) {
  return img.record_id() + ":" + std::to_string(img.r_index());
}

// Per-beat RNG derived from (seed, position) so a beat's score does not
// depend on what else is scored alongside it.
inline std::mt19937_64 beat_stream(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(training::Stream::score), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  return std::mt19937_64(seq);
}

inline std::vector<ScoredBeat> score_images(std::span<const beats::BeatImage> images,
                                            const model::GeneratorParams& gen, const ScoreOptions& opt) {
  if (opt.k_draws < 1) throw ConfigError("k_draws must be at least 1");
  const model::PatchGrid grid = gen.config.grid();
  std::vector<ScoredBeat> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    auto rng = beat_stream(opt.seed, i);
    const auto seq = model::patchify(images[i].pixels(), grid);
    out.push_back({source_id(images[i]), images[i].aami_class(),
                   anomaly_score(seq, gen, opt.k_draws, rng, opt.mask, opt.gamma_con)});
  }
  return out;
}

/// Rank-based AUROC: P(anomalous outscores normal) + 0.5 P(tie), computed
/// from average ranks (Mann-Whitney U).
inline double roc_auc(std::span<const double> scores, const std::vector<bool>& anomalous) {
  if (scores.size() != anomalous.size()) throw ShapeError("roc_auc: score and label counts differ");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (bool a : anomalous) n_pos += a ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ContractError("roc_auc: need both normal and anomalous samples");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (anomalous[idx[t]]) rank_sum += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace detail {
inline std::pair<std::vector<double>, std::vector<bool>> unzip(std::span<const ScoredBeat> scored) {
  std::vector<double> s;
  std::vector<bool> a;
  for (const auto& b : scored) {
    s.push_back(b.score);
    a.push_back(b.is_anomalous());
  }
  return {std::move(s), std::move(a)};
}
}  // namespace detail

inline double roc_auc(std::span<const ScoredBeat> scored) {
  const auto [s, a] = detail::unzip(scored);
  return roc_auc(s, a);
}

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

/// Operating points for the rule score > threshold: one per distinct score,
/// descending, then a final point just below the minimum where every beat is
/// flagged.
inline std::vector<RocPoint> roc_curve(std::span<const ScoredBeat> scored) {
  std::size_t n_pos = 0;
  for (const auto& b : scored) n_pos += b.is_anomalous() ? 1 : 0;
  const std::size_t n_neg = scored.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ContractError("roc_curve: need both normal and anomalous samples");
  std::vector<const ScoredBeat*> sorted;
  for (const auto& b : scored) sorted.push_back(&b);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->score > b->score; });
  std::vector<RocPoint> out;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i]->score;
    out.push_back({t, static_cast<double>(tp) / static_cast<double>(n_pos),
                   static_cast<double>(fp) / static_cast<double>(n_neg)});
    while (i < sorted.size() && sorted[i]->score == t) {
      (sorted[i]->is_anomalous() ? tp : fp) += 1;
      ++i;
    }
  }
  out.push_back({std::nextafter(sorted.back()->score, -std::numeric_limits<double>::infinity()), 1.0, 1.0});
  return out;
}

/// Linear-interpolation quantile (position q*(n-1) in the sorted scores).
inline double select_threshold(std::span<const double> train_scores, double quantile = 0.95) {
  if (train_scores.empty()) throw ContractError("select_threshold: no scores");
  if (!(quantile >= 0.0 && quantile <= 1.0)) throw ConfigError("quantile must lie in [0,1]");
  std::vector<double> s(train_scores.begin(), train_scores.end());
  std::sort(s.begin(), s.end());
  const double pos = quantile * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return frac == 0.0 ? s[lo] : s[lo] + frac * (s[hi] - s[lo]);
}

struct MetricsReport {
  double threshold = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
  std::optional<double> auroc;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

// Rates with an empty denominator are reported as 0.
inline MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn,
                                         double threshold = 0.0) {
  auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  MetricsReport r;
  r.threshold = threshold;
  r.tp = tp;
  r.fp = fp;
  r.tn = tn;
  r.fn = fn;
  r.accuracy = ratio(tp + tn, tp + fp + tn + fn);
  r.sensitivity = ratio(tp, tp + fn);
  r.specificity = ratio(tn, tn + fp);
  r.f1 = ratio(2 * tp, 2 * tp + fp + fn);
  return r;
}

// A beat is flagged anomalous iff its score is strictly above the threshold.
inline MetricsReport confusion_metrics(std::span<const ScoredBeat> scored, double threshold) {
  if (scored.empty()) throw ContractError("confusion_metrics: no scored beats");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  bool any_pos = false, any_neg = false;
  for (const auto& b : scored) {
    const bool flagged = b.score > threshold;
    if (b.is_anomalous()) {
      any_pos = true;
      (flagged ? tp : fn) += 1;
    } else {
      any_neg = true;
      (flagged ? fp : tn) += 1;
    }
  }
  MetricsReport r = metrics_from_counts(tp, fp, tn, fn, threshold);
  if (any_pos && any_neg) r.auroc = roc_auc(scored);
  return r;
}

inline void write_scores_csv(std::ostream& os, std::span<const ScoredBeat> scored) {
  os << "source_id,true_class,score\n";
  for (const auto& b : scored)
    os << b.source_id << ',' << beats::to_char(b.true_class) << ',' << training::format_real(b.score) << '\n';
}

inline void write_roc_csv(std::ostream& os, std::span<const RocPoint> roc) {
  os << "threshold,tpr,fpr\n";
  for (const auto& p : roc)
    os << training::format_real(p.threshold) << ',' << training::format_real(p.tpr) << ','
       << training::format_real(p.fpr) << '\n';
}

inline nlohmann::ordered_json metrics_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["threshold"] = r.threshold;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["tn"] = r.tn;
  j["fn"] = r.fn;
  j["accuracy"] = r.accuracy;
  j["sensitivity"] = r.sensitivity;
  j["specificity"] = r.specificity;
  j["f1"] = r.f1;
  j["auroc"] = r.auroc ? nlohmann::ordered_json(*r.auroc) : nlohmann::ordered_json(nullptr);
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.threshold = j.at("threshold").get<double>();
  r.tp = j.at("tp").get<std::size_t>();
  r.fp = j.at("fp").get<std::size_t>();
  r.tn = j.at("tn").get<std::size_t>();
  r.fn = j.at("fn").get<std::size_t>();
  r.accuracy = j.at("accuracy").get<double>();
  r.sensitivity = j.at("sensitivity").get<double>();
  r.specificity = j.at("specificity").get<double>();
  r.f1 = j.at("f1").get<double>();
  if (!j.at("auroc").is_null()) r.auroc = j.at("auroc").get<double>();
  return r;
}

}  // namespace ebgame::evaluate
