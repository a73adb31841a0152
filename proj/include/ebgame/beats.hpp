#pragma once

// From annotated records to labeled beat images: R-peak windows, AAMI class
// remapping, grayscale rasterization, train/test split assembly and a
// synthetic ECG beat generator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ebgame/errors.hpp"
#include "ebgame/wfdb.hpp"

namespace ebgame::beats {

enum class AamiClass : std::uint8_t { N = 0, S = 1, V = 2, F = 3, Q = 4 };

inline constexpr std::array<AamiClass, 5> kAllClasses = {AamiClass::N, AamiClass::S, AamiClass::V,
                                                         AamiClass::F, AamiClass::Q};

inline char to_char(AamiClass c) { return "NSVFQ"[static_cast<int>(c)]; }

inline std::optional<AamiClass> aami_from_char(char c) {
  switch (c) {
    case 'N': return AamiClass::N;
    case 'S': return AamiClass::S;
    case 'V': return AamiClass::V;
    case 'F': return AamiClass::F;
    case 'Q': return AamiClass::Q;
    default: return std::nullopt;
  }
}

/// MIT-BIH beat symbol -> AAMI class. Returns nullopt for anything that is not
/// one of the 15 beat symbols (rhythm changes, noise markers, ...).
inline std::optional<AamiClass> map_aami(std::string_view mit_symbol) {
  if (mit_symbol.size() != 1) return std::nullopt;
  switch (mit_symbol[0]) {
    case 'N': case 'L': case 'R': case 'e': case 'j':
      return AamiClass::N;
    case 'A': case 'a': case 'J': case 'S':
      return AamiClass::S;
    case 'V': case 'E':
      return AamiClass::V;
    case 'F':
      return AamiClass::F;
    case '/': case 'f': case 'Q':
      return AamiClass::Q;
    default:
      return std::nullopt;
  }
}

struct Beat {
  std::string record_id;
  std::uint64_t r_index = 0;
  std::vector<double> samples;
  char mit_code = 'N';
};

inline constexpr std::size_t kImageSize = 128;

// 128×128 grayscale beat image, row-major, row 0 at the top.
class BeatImage {
 public:
  BeatImage(std::vector<double> pixels, AamiClass cls, std::string record_id, std::uint64_t r_index)
      : pixels_(std::move(pixels)), class_(cls), record_id_(std::move(record_id)), r_index_(r_index) {
    if (pixels_.size() != kImageSize * kImageSize) {
      throw ShapeError("beat image must be 128x128, got " + std::to_string(pixels_.size()) + " pixels");
    }
    for (double v : pixels_) {
      if (!(v >= 0.0 && v <= 1.0)) throw RangeError("beat image pixel outside [0,1]");
    }
  }

  std::size_t height() const noexcept { return kImageSize; }
  std::size_t width() const noexcept { return kImageSize; }
  const std::vector<double>& pixels() const noexcept { return pixels_; }
  double at(std::size_t row, std::size_t col) const { return pixels_[row * kImageSize + col]; }
  AamiClass aami_class() const noexcept { return class_; }
  const std::string& record_id() const noexcept { return record_id_; }
  std::uint64_t r_index() const noexcept { return r_index_; }

 private:
  std::vector<double> pixels_;
  AamiClass class_;
  std::string record_id_;
  std::uint64_t r_index_;
};

struct WindowSpec {
  double pre_s = 0.3;
  double post_s = 0.4;

  std::size_t pre_samples(double fs) const { return static_cast<std::size_t>(std::lround(pre_s * fs)); }
  std::size_t post_samples(double fs) const { return static_cast<std::size_t>(std::lround(post_s * fs)); }
  std::size_t length(double fs) const { return pre_samples(fs) + post_samples(fs); }
};

/// Cuts [r - pre, r + post) around every beat annotation. Windows that leave
/// the record and non-beat annotations are dropped.
inline std::vector<Beat> segment_beats(std::span<const int> signal,
                                       std::span<const wfdb::Annotation> annotations, double fs,
                                       WindowSpec window, const std::string& record_id = {}) {
  std::vector<Beat> out;
  if (!(fs > 0.0) || !(window.pre_s > 0.0) || !(window.post_s > 0.0)) return out;
  const std::size_t pre = window.pre_samples(fs);
  const std::size_t post = window.post_samples(fs);
  for (const auto& a : annotations) {
    const auto sym = wfdb::code_symbol(a.code);
    if (!map_aami(sym)) continue;
    if (a.sample_index < pre || a.sample_index + post > signal.size()) continue;
    Beat b;
    b.record_id = record_id;
    b.r_index = a.sample_index;
    b.mit_code = sym[0];
    const auto begin = signal.begin() + static_cast<std::ptrdiff_t>(a.sample_index - pre);
    b.samples.assign(begin, begin + static_cast<std::ptrdiff_t>(pre + post));
    out.push_back(std::move(b));
  }
  return out;
}

/// Draws a beat as a one-pixel polyline (1.0) on a black (0.0) 128×128 canvas.
///
/// The window is resampled linearly to 128 columns and min-max normalized so
/// the largest resampled value sits on row 0 and the smallest on row 127. A
/// flat window is drawn on the middle row. Consecutive columns are joined
/// with vertical runs that meet halfway, so the trace is 8-connected.
inline BeatImage rasterize_beat(const Beat& beat) {
  if (beat.samples.empty()) throw ContractError("rasterize_beat: empty beat");
  const auto cls = map_aami(std::string_view(&beat.mit_code, 1));
  if (!cls) throw ContractError(std::string("rasterize_beat: '") + beat.mit_code + "' is not a beat symbol");
  constexpr std::size_t n = kImageSize;
  const std::size_t len = beat.samples.size();
  std::vector<double> col_value(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (len == 1) {
      col_value[j] = beat.samples[0];
      continue;
    }
    const double x = static_cast<double>(j) * static_cast<double>(len - 1) / static_cast<double>(n - 1);
    const std::size_t i0 = std::min(static_cast<std::size_t>(x), len - 2);
    const double frac = x - static_cast<double>(i0);
    col_value[j] = beat.samples[i0] * (1.0 - frac) + beat.samples[i0 + 1] * frac;
  }
  const auto [lo_it, hi_it] = std::minmax_element(col_value.begin(), col_value.end());
  const double lo = *lo_it, range = *hi_it - *lo_it;
  std::vector<std::size_t> row(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double v = range > 0.0 ? (col_value[j] - lo) / range : 0.5;
    row[j] = static_cast<std::size_t>(std::lround((1.0 - v) * static_cast<double>(n - 1)));
  }
  std::vector<double> px(n * n, 0.0);
  auto fill = [&](std::size_t col, std::size_t r0, std::size_t r1) {
    if (r0 > r1) std::swap(r0, r1);
    for (std::size_t r = r0; r <= r1; ++r) px[r * n + col] = 1.0;
  };
  for (std::size_t j = 0; j < n; ++j) px[row[j] * n + j] = 1.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const std::size_t a = row[j], b = row[j + 1];
    if (a == b) continue;
    // Column j climbs to the midpoint, column j+1 covers the rest.
    if (a < b) {
      const std::size_t mid = (a + b) / 2;
      fill(j, a, mid);
      fill(j + 1, std::min(mid + 1, b), b);
    } else {
      const std::size_t mid = (a + b + 1) / 2;
      fill(j, mid, a);
      fill(j + 1, b, std::max(mid - 1, b));
    }
  }
  return BeatImage(std::move(px), *cls, beat.record_id, beat.r_index);
}

inline const std::vector<std::string>& default_excluded_records() {
  static const std::vector<std::string> ids{"102", "104", "107", "217", "218"};
  return ids;
}

struct SplitOptions {
  WindowSpec window;
  std::vector<std::string> excluded = default_excluded_records();
  std::size_t test_normal = 1000;
  // 0 keeps everything.
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
  std::uint64_t seed = 0;
};

struct LabeledBeat {
  Beat beat;
  AamiClass aami_class = AamiClass::N;
};

// Split membership before rasterization. Cheap to hold for a whole database.
struct SplitPlan {
  std::vector<LabeledBeat> train;
  std::vector<LabeledBeat> test;
  std::vector<std::string> excluded_records;
};

struct DatasetSplit {
  std::vector<BeatImage> train;
  std::vector<BeatImage> test;
  std::vector<std::string> excluded_records;
};

/// Segments every non-excluded record (channel 0) and assigns beats to splits.
/// A seeded sample of `test_normal` N beats is held out for testing; the
/// remaining N beats train; every S/V/F/Q beat is a test beat. Optional limits
/// subsample each split with the same seed.
inline SplitPlan plan_splits(std::span<const wfdb::Record> records, const SplitOptions& opt) {
  if (records.empty()) throw ConfigError("build_splits: no records given");
  std::vector<LabeledBeat> normal, abnormal;
  for (const auto& rec : records) {
    const auto& id = rec.header.record_name;
    if (std::find(opt.excluded.begin(), opt.excluded.end(), id) != opt.excluded.end()) continue;
    if (rec.signal.channels.empty()) continue;
    for (auto& b : segment_beats(rec.signal.channels[0], rec.annotations, rec.header.sampling_frequency,
                                 opt.window, id)) {
      const auto cls = *map_aami(std::string_view(&b.mit_code, 1));
      (cls == AamiClass::N ? normal : abnormal).push_back({std::move(b), cls});
    }
  }
  std::mt19937_64 rng(opt.seed);
  std::shuffle(normal.begin(), normal.end(), rng);
  SplitPlan plan;
  plan.excluded_records = opt.excluded;
  const std::size_t held = std::min(opt.test_normal, normal.size());
  plan.test.assign(std::make_move_iterator(normal.begin()),
                   std::make_move_iterator(normal.begin() + static_cast<std::ptrdiff_t>(held)));
  plan.train.assign(std::make_move_iterator(normal.begin() + static_cast<std::ptrdiff_t>(held)),
                    std::make_move_iterator(normal.end()));
  for (auto& b : abnormal) plan.test.push_back(std::move(b));
  auto limit = [&rng](std::vector<LabeledBeat>& v, std::size_t n) {
    if (n == 0 || v.size() <= n) return;
    std::shuffle(v.begin(), v.end(), rng);
    v.resize(n);
  };
  limit(plan.train, opt.train_limit);
  limit(plan.test, opt.test_limit);
  // Stable presentation order: input record order, then time.
  auto record_rank = [&](const std::string& id) {
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].header.record_name == id) return i;
    return records.size();
  };
  auto by_source = [&](const LabeledBeat& a, const LabeledBeat& b) {
    const auto ra = record_rank(a.beat.record_id), rb = record_rank(b.beat.record_id);
    return ra != rb ? ra < rb : a.beat.r_index < b.beat.r_index;
  };
  std::sort(plan.train.begin(), plan.train.end(), by_source);
  std::sort(plan.test.begin(), plan.test.end(), by_source);
  return plan;
}

inline std::vector<BeatImage> rasterize_all(std::span<const LabeledBeat> beats) {
  std::vector<BeatImage> out;
  out.reserve(beats.size());
  for (const auto& b : beats) out.push_back(rasterize_beat(b.beat));
  return out;
}

inline DatasetSplit build_splits(std::span<const wfdb::Record> records, const SplitOptions& opt) {
  const SplitPlan plan = plan_splits(records, opt);
  return DatasetSplit{rasterize_all(plan.train), rasterize_all(plan.test), plan.excluded_records};
}

enum class SynthKind { normal, inverted_qrs, missing_p, scaled };

inline std::string_view to_string(SynthKind k) {
  switch (k) {
    case SynthKind::normal: return "normal";
    case SynthKind::inverted_qrs: return "inverted_qrs";
    case SynthKind::missing_p: return "missing_p";
    case SynthKind::scaled: return "scaled";
  }
  return "?";
}

// Label each synthetic kind carries: the MIT symbol of a comparable real beat.
inline char synth_symbol(SynthKind k) {
  switch (k) {
    case SynthKind::normal: return 'N';
    case SynthKind::inverted_qrs: return 'V';
    case SynthKind::missing_p: return 'J';
    case SynthKind::scaled: return 'F';
  }
  return 'Q';
}

struct SynthOptions {
  double fs = 360.0;
  WindowSpec window;
  double noise_std = 0.008;
  double anomaly_scale = 2.5;
};

/// Synthetic beat: P, QRS and T Gaussian bumps with jittered amplitude, width
/// and position plus white noise, R peak at the window anchor.
///   inverted_qrs  QRS sign flipped
///   missing_p     no P wave
///   scaled        T wave amplitude multiplied by 2.5
inline Beat synth_beat(SynthKind kind, std::mt19937_64& rng, const SynthOptions& opt = {}) {
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, opt.noise_std);
  struct Wave {
    double center_s, width_s, amp;
  };
  Wave p{-0.16 + 0.008 * jitter(rng), 0.022 * (1.0 + 0.1 * jitter(rng)), 0.22 * (1.0 + 0.1 * jitter(rng))};
  Wave qrs{0.0, 0.011 * (1.0 + 0.1 * jitter(rng)), 1.0 * (1.0 + 0.1 * jitter(rng))};
  Wave t{0.26 + 0.012 * jitter(rng), 0.045 * (1.0 + 0.1 * jitter(rng)), 0.32 * (1.0 + 0.1 * jitter(rng))};
  switch (kind) {
    case SynthKind::normal: break;
    case SynthKind::inverted_qrs: qrs.amp = -qrs.amp; break;
    case SynthKind::missing_p: p.amp = 0.0; break;
    case SynthKind::scaled: t.amp *= opt.anomaly_scale; break;
  }
  const std::size_t pre = opt.window.pre_samples(opt.fs);
  const std::size_t len = opt.window.length(opt.fs);
  Beat b;
  b.record_id = "synthetic";
  b.r_index = pre;
  b.mit_code = synth_symbol(kind);
  b.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double t_s = (static_cast<double>(i) - static_cast<double>(pre)) / opt.fs;
    double v = 0.0;
    for (const Wave& w : {p, qrs, t}) {
      const double z = (t_s - w.center_s) / w.width_s;
      v += w.amp * std::exp(-0.5 * z * z);
    }
    b.samples[i] = v + noise(rng);
  }
  return b;
}

struct SyntheticCorpusOptions {
  std::size_t train_normal = 512;
  std::size_t test_normal = 200;
  std::size_t test_anomalous = 200;
  std::uint64_t seed = 0;
  SynthOptions synth;
};

/// Synthetic stand-in for the database split: normal training beats, held-out
/// normal test beats, and anomalies cycling through the three anomaly kinds.
/// Beats are numbered through `r_index` so every (record_id, r_index) is unique.
inline SplitPlan synthetic_plan(const SyntheticCorpusOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  SplitPlan plan;
  std::uint64_t serial = 0;
  auto make = [&](SynthKind kind) {
    Beat b = synth_beat(kind, rng, opt.synth);
    b.r_index = serial++;
    const auto cls = *map_aami(std::string_view(&b.mit_code, 1));
    return LabeledBeat{std::move(b), cls};
  };
  for (std::size_t i = 0; i < opt.train_normal; ++i) plan.train.push_back(make(SynthKind::normal));
  for (std::size_t i = 0; i < opt.test_normal; ++i) plan.test.push_back(make(SynthKind::normal));
  constexpr std::array<SynthKind, 3> anomalies = {SynthKind::inverted_qrs, SynthKind::missing_p,
                                                  SynthKind::scaled};
  for (std::size_t i = 0; i < opt.test_anomalous; ++i) plan.test.push_back(make(anomalies[i % 3]));
  return plan;
}

}  // namespace ebgame::beats
