#pragma once

// Run configuration, on-disk artifacts and the stages wired together by the
// command-line tool.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ebgame/beats.hpp"
#include "ebgame/errors.hpp"
#include "ebgame/evaluate.hpp"
#include "ebgame/model.hpp"
#include "ebgame/training.hpp"
#include "ebgame/wfdb.hpp"

namespace ebgame::pipeline {

inline constexpr std::string_view kVersion = "0.1.0";

// A required input file or directory does not exist.
class MissingPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir = "out";
  bool synthetic = false;
  model::ModelConfig model;
  training::TrainConfig train;
  beats::WindowSpec window;
  std::vector<std::string> excluded = beats::default_excluded_records();
  std::size_t test_normal = 1000;
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
  std::size_t synth_train = 512;
  std::size_t synth_test_normal = 200;
  std::size_t synth_test_anomalous = 200;
  std::size_t k_draws = 8;
  double threshold_quantile = 0.95;
  // Training-normal beats scored to place the threshold; 0 scores all.
  std::size_t threshold_sample = 1000;

  std::uint64_t seed() const noexcept { return train.seed; }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  if constexpr (std::is_unsigned_v<T>) {
    if (!v.empty() && v[0] == '-') throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  is >> out;
  if (!is || !is.eof()) throw ConfigError(key + ": cannot parse '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Key {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Key number_key(std::string name, T RunConfig::*m) {
  return {[name, m](RunConfig& c, const std::string& v) { c.*m = parse_number<T>(name, v); },
          [m](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return training::format_real(c.*m);
            else return std::to_string(c.*m);
          }};
}

template <class S, class T>
Key nested_key(std::string name, S RunConfig::*outer, T S::*m) {
  return {[name, outer, m](RunConfig& c, const std::string& v) { (c.*outer).*m = parse_number<T>(name, v); },
          [outer, m](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return training::format_real((c.*outer).*m);
            else return std::to_string((c.*outer).*m);
          }};
}

// Ordered so the echo groups related settings.
inline const std::vector<std::pair<std::string, Key>>& key_table() {
  static const std::vector<std::pair<std::string, Key>> table = [] {
    std::vector<std::pair<std::string, Key>> t;
    auto add = [&](std::string name, Key k) { t.emplace_back(std::move(name), std::move(k)); };
    add("data_dir", {[](RunConfig& c, const std::string& v) { c.data_dir = v; },
                     [](const RunConfig& c) { return c.data_dir.string(); }});
    add("out_dir", {[](RunConfig& c, const std::string& v) { c.out_dir = v; },
                    [](const RunConfig& c) { return c.out_dir.string(); }});
    add("synthetic", {[](RunConfig& c, const std::string& v) { c.synthetic = parse_bool("synthetic", v); },
                      [](const RunConfig& c) { return std::string(c.synthetic ? "true" : "false"); }});
    add("seed", nested_key("seed", &RunConfig::train, &training::TrainConfig::seed));
    add("image_size", nested_key("image_size", &RunConfig::model, &model::ModelConfig::image_size));
    add("patch_size", nested_key("patch_size", &RunConfig::model, &model::ModelConfig::patch_size));
    add("embed_dim", nested_key("embed_dim", &RunConfig::model, &model::ModelConfig::embed_dim));
    add("encoder_depth", nested_key("encoder_depth", &RunConfig::model, &model::ModelConfig::encoder_depth));
    add("decoder_dim", nested_key("decoder_dim", &RunConfig::model, &model::ModelConfig::decoder_dim));
    add("decoder_depth", nested_key("decoder_depth", &RunConfig::model, &model::ModelConfig::decoder_depth));
    add("disc_dim", nested_key("disc_dim", &RunConfig::model, &model::ModelConfig::disc_dim));
    add("disc_depth", nested_key("disc_depth", &RunConfig::model, &model::ModelConfig::disc_depth));
    add("num_heads", nested_key("num_heads", &RunConfig::model, &model::ModelConfig::num_heads));
    add("mlp_ratio", nested_key("mlp_ratio", &RunConfig::model, &model::ModelConfig::mlp_ratio));
    using TC = training::TrainConfig;
    add("epochs", nested_key("epochs", &RunConfig::train, &TC::epochs));
    add("batch_size", nested_key("batch_size", &RunConfig::train, &TC::batch_size));
    add("base_lr", nested_key("base_lr", &RunConfig::train, &TC::base_lr));
    add("warmup_steps", nested_key("warmup_steps", &RunConfig::train, &TC::warmup_steps));
    add("weight_decay", nested_key("weight_decay", &RunConfig::train, &TC::weight_decay));
    add("disc_lr", nested_key("disc_lr", &RunConfig::train, &TC::disc_lr));
    add("mask_ratio", nested_key("mask_ratio", &RunConfig::train, &TC::mask_ratio));
    add("mask_sampling",
        {[](RunConfig& c, const std::string& v) {
           if (v == "truncated_normal") c.train.mask_sampling = model::MaskSampling::truncated_normal;
           else if (v == "uniform") c.train.mask_sampling = model::MaskSampling::uniform;
           else throw ConfigError("mask_sampling: expected truncated_normal or uniform, got '" + v + "'");
         },
         [](const RunConfig& c) {
           return std::string(c.train.mask_sampling == model::MaskSampling::uniform ? "uniform"
                                                                                    : "truncated_normal");
         }});
    add("mask_sigma_fraction", nested_key("mask_sigma_fraction", &RunConfig::train, &TC::mask_sigma_fraction));
    add("gamma_adv", nested_key("gamma_adv", &RunConfig::train, &TC::gamma_adv));
    add("gamma_con", nested_key("gamma_con", &RunConfig::train, &TC::gamma_con));
    add("pre_s", nested_key("pre_s", &RunConfig::window, &beats::WindowSpec::pre_s));
    add("post_s", nested_key("post_s", &RunConfig::window, &beats::WindowSpec::post_s));
    add("excluded_records", {[](RunConfig& c, const std::string& v) { c.excluded = parse_list(v); },
                             [](const RunConfig& c) {
                               std::string s;
                               for (const auto& e : c.excluded) s += (s.empty() ? "" : ",") + e;
                               return s;
                             }});
    add("test_normal", number_key("test_normal", &RunConfig::test_normal));
    add("train_limit", number_key("train_limit", &RunConfig::train_limit));
    add("test_limit", number_key("test_limit", &RunConfig::test_limit));
    add("synth_train", number_key("synth_train", &RunConfig::synth_train));
    add("synth_test_normal", number_key("synth_test_normal", &RunConfig::synth_test_normal));
    add("synth_test_anomalous", number_key("synth_test_anomalous", &RunConfig::synth_test_anomalous));
    add("k_draws", number_key("k_draws", &RunConfig::k_draws));
    add("threshold_quantile", number_key("threshold_quantile", &RunConfig::threshold_quantile));
    add("threshold_sample", number_key("threshold_sample", &RunConfig::threshold_sample));
    return t;
  }();
  return table;
}

inline const Key* find_key(const std::string& name) {
  for (const auto& [n, k] : key_table())
    if (n == name) return &k;
  return nullptr;
}

}  // namespace detail

inline void set_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const detail::Key* k = detail::find_key(key);
  if (!k) throw ConfigError("unknown config key '" + key + "'");
  k->set(cfg, value);
}

inline void validate(const RunConfig& cfg) {
  cfg.model.validate();
  if (cfg.model.image_size != beats::kImageSize) throw ConfigError("image_size must be 128");
  cfg.train.validate();
  if (cfg.k_draws < 1) throw ConfigError("k_draws must be at least 1");
  if (!(cfg.threshold_quantile >= 0.0 && cfg.threshold_quantile <= 1.0)) {
    throw ConfigError("threshold_quantile must lie in [0,1]");
  }
  if (!(cfg.window.pre_s > 0.0 && cfg.window.post_s > 0.0)) throw ConfigError("pre_s and post_s must be positive");
}

/// `key = value` lines with '#' comments. Errors carry the 1-based line.
inline RunConfig parse_config(std::string_view text, RunConfig cfg = {}) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    try {
      set_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

/// Defaults, then the file (if any), then `overrides` in order.
inline RunConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  RunConfig cfg;
  if (path) {
    if (!std::filesystem::exists(*path)) throw MissingPathError("config file not found: " + path->string());
    cfg = parse_config(wfdb::read_text(*path), cfg);
  }
  for (const auto& [k, v] : overrides) set_value(cfg, k, v);
  validate(cfg);
  return cfg;
}

/// Every effective value, re-parseable by parse_config. Without paths the
/// text depends only on settings, so it can be embedded in artifacts.
inline std::string config_text(const RunConfig& cfg, bool with_paths = true) {
  std::string out = "# ebgame " + std::string(kVersion) + "\n";
  for (const auto& [name, k] : detail::key_table()) {
    if (!with_paths && (name == "data_dir" || name == "out_dir")) continue;
    out += name + " = " + k.get(cfg) + "\n";
  }
  return out;
}

// Image container: "EBGIMG\0\0", u32 version, u64 count, then per image
// u8 class, u32 id length, id bytes, u64 r_index, 128*128 u8 pixels (v*255).
namespace detail {
inline constexpr char kImageMagic[8] = {'E', 'B', 'G', 'I', 'M', 'G', '\0', '\0'};
inline constexpr std::uint32_t kImageVersion = 1;

template <class T>
void put(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little);
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

struct Reader {
  std::string_view data;
  std::size_t pos = 0;
  template <class T>
  T get() {
    if (data.size() - pos < sizeof(T)) throw ParseError("image container truncated");
    T v;
    std::memcpy(&v, data.data() + pos, sizeof v);
    pos += sizeof v;
    return v;
  }
  std::string_view bytes(std::size_t n) {
    if (data.size() - pos < n) throw ParseError("image container truncated");
    const auto s = data.substr(pos, n);
    pos += n;
    return s;
  }
};
}  // namespace detail

inline std::string encode_images(std::span<const beats::BeatImage> images) {
  std::string out(detail::kImageMagic, sizeof detail::kImageMagic);
  detail::put(out, detail::kImageVersion);
  detail::put(out, static_cast<std::uint64_t>(images.size()));
  for (const auto& img : images) {
    detail::put(out, static_cast<std::uint8_t>(img.aami_class()));
    detail::put(out, static_cast<std::uint32_t>(img.record_id().size()));
    out += img.record_id();
    detail::put(out, img.r_index());
    for (double v : img.pixels()) out.push_back(static_cast<char>(std::lround(v * 255.0)));
  }
  return out;
}

inline std::vector<beats::BeatImage> decode_images(std::string_view data) {
  detail::Reader r{data};
  if (r.bytes(8) != std::string_view(detail::kImageMagic, 8)) throw ParseError("not an image container");
  if (const auto v = r.get<std::uint32_t>(); v != detail::kImageVersion) {
    throw ParseError("unsupported image container version " + std::to_string(v));
  }
  const auto n = r.get<std::uint64_t>();
  std::vector<beats::BeatImage> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto cls = r.get<std::uint8_t>();
    if (cls >= beats::kAllClasses.size()) throw ParseError("image container: bad class code");
    const std::string id(r.bytes(r.get<std::uint32_t>()));
    const auto r_index = r.get<std::uint64_t>();
    const auto px = r.bytes(beats::kImageSize * beats::kImageSize);
    std::vector<double> pixels(px.size());
    for (std::size_t k = 0; k < px.size(); ++k) pixels[k] = static_cast<std::uint8_t>(px[k]) / 255.0;
    out.emplace_back(std::move(pixels), static_cast<beats::AamiClass>(cls), id, r_index);
  }
  if (r.pos != data.size()) throw ParseError("image container has trailing bytes");
  return out;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_required(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingPathError("required file not found: " + path.string());
  return wfdb::read_text(path);
}

inline std::string manifest_csv(const beats::DatasetSplit& split) {
  std::string out = "record_id,r_index,aami_class,split\n";
  auto rows = [&](const std::vector<beats::BeatImage>& imgs, const char* name) {
    for (const auto& b : imgs)
      out += b.record_id() + "," + std::to_string(b.r_index()) + "," + beats::to_char(b.aami_class()) + "," +
             name + "\n";
  };
  rows(split.train, "train");
  rows(split.test, "test");
  return out;
}

struct Paths {
  std::filesystem::path out;
  auto manifest() const { return out / "manifest.csv"; }
  auto train_split() const { return out / "splits" / "train.bin"; }
  auto test_split() const { return out / "splits" / "test.bin"; }
  auto checkpoint() const { return out / "checkpoint.bin"; }
  auto loss_history() const { return out / "loss_history.csv"; }
  auto scores() const { return out / "scores.csv"; }
  auto train_scores() const { return out / "train_scores.csv"; }
  auto roc() const { return out / "roc.csv"; }
  auto metrics() const { return out / "metrics.txt"; }
  auto echo() const { return out / "config.echo"; }
};

inline void write_echo(const RunConfig& cfg) { write_file(Paths{cfg.out_dir}.echo(), config_text(cfg)); }

inline void write_dataset(const RunConfig& cfg, const beats::DatasetSplit& split) {
  const Paths p{cfg.out_dir};
  write_file(p.manifest(), manifest_csv(split));
  write_file(p.train_split(), encode_images(split.train));
  write_file(p.test_split(), encode_images(split.test));
}

/// Reads every `<name>.hea` under data_dir (sorted by name) and writes the
/// manifest and split containers.
inline beats::DatasetSplit ingest(const RunConfig& cfg) {
  if (cfg.data_dir.empty() || !std::filesystem::is_directory(cfg.data_dir)) {
    throw MissingPathError("data directory not found: '" + cfg.data_dir.string() + "'");
  }
  std::vector<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(cfg.data_dir))
    if (e.path().extension() == ".hea") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  std::vector<wfdb::Record> records;
  for (const auto& n : names) {
    if (std::find(cfg.excluded.begin(), cfg.excluded.end(), n) != cfg.excluded.end()) continue;
    records.push_back(wfdb::read_record(cfg.data_dir, n));
  }
  beats::SplitOptions opt;
  opt.window = cfg.window;
  opt.excluded = cfg.excluded;
  opt.test_normal = cfg.test_normal;
  opt.train_limit = cfg.train_limit;
  opt.test_limit = cfg.test_limit;
  opt.seed = cfg.seed();
  auto split = beats::build_splits(records, opt);
  write_dataset(cfg, split);
  return split;
}

inline beats::DatasetSplit synth(const RunConfig& cfg) {
  beats::SyntheticCorpusOptions opt;
  opt.train_normal = cfg.synth_train;
  opt.test_normal = cfg.synth_test_normal;
  opt.test_anomalous = cfg.synth_test_anomalous;
  opt.seed = cfg.seed();
  opt.synth.window = cfg.window;
  const auto plan = beats::synthetic_plan(opt);
  beats::DatasetSplit split{beats::rasterize_all(plan.train), beats::rasterize_all(plan.test), {}};
  write_dataset(cfg, split);
  return split;
}

inline training::TrainResult train(const RunConfig& cfg, std::ostream* log = nullptr) {
  const Paths p{cfg.out_dir};
  const auto images = decode_images(read_required(p.train_split()));
  auto res = training::train(images, cfg.model, cfg.train, [&](const training::EpochRecord& r) {
    if (log) {
      *log << "epoch " << r.epoch << " l_mae=" << training::format_real(r.l_mae)
           << " l_total=" << training::format_real(r.l_total) << "\n";
    }
  });
  write_file(p.checkpoint(), model::encode_checkpoint(model::make_checkpoint(res.generator, res.discriminator,
                                                                             config_text(cfg, false))));
  std::ostringstream hist;
  training::write_loss_history(hist, res.history);
  write_file(p.loss_history(), hist.str());
  return res;
}

inline evaluate::ScoreOptions score_options(const RunConfig& cfg) {
  evaluate::ScoreOptions opt;
  opt.k_draws = cfg.k_draws;
  opt.mask = cfg.train.mask_options();
  opt.gamma_con = cfg.train.gamma_con;
  opt.seed = cfg.seed();
  return opt;
}

// Evenly strided subset of at most n images (all when n == 0).
inline std::vector<beats::BeatImage> stride_subset(std::vector<beats::BeatImage> images, std::size_t n) {
  if (n == 0 || images.size() <= n) return images;
  std::vector<beats::BeatImage> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::move(images[i * images.size() / n]));
  return out;
}

/// Scores the test split (scores.csv) and a training-normal reference set
/// used for the threshold (train_scores.csv).
inline std::vector<evaluate::ScoredBeat> score(const RunConfig& cfg) {
  const Paths p{cfg.out_dir};
  const auto ck = model::decode_checkpoint(read_required(p.checkpoint()));
  const auto loaded = model::restore_model(ck);
  const auto test = decode_images(read_required(p.test_split()));
  const auto reference = stride_subset(decode_images(read_required(p.train_split())), cfg.threshold_sample);
  const auto opt = score_options(cfg);
  auto scored = evaluate::score_images(test, loaded.generator, opt);
  auto ref_opt = opt;
  // Separate stream so reference and test beats never share masks by index.
  ref_opt.seed = opt.seed ^ 0x9e3779b97f4a7c15ULL;
  const auto ref_scored = evaluate::score_images(reference, loaded.generator, ref_opt);
  std::ostringstream a, b;
  evaluate::write_scores_csv(a, scored);
  evaluate::write_scores_csv(b, ref_scored);
  write_file(p.scores(), a.str());
  write_file(p.train_scores(), b.str());
  return scored;
}

inline std::vector<evaluate::ScoredBeat> read_scores_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "source_id,true_class,score") throw ParseError("bad scores header");
  std::vector<evaluate::ScoredBeat> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c2 = line.rfind(',');
    const auto c1 = c2 == std::string::npos ? c2 : line.rfind(',', c2 - 1);
    if (c1 == std::string::npos || c2 != c1 + 2) throw ParseError("scores line " + std::to_string(lineno));
    const auto cls = beats::aami_from_char(line[c1 + 1]);
    if (!cls) throw ParseError("scores line " + std::to_string(lineno) + ": bad class");
    out.push_back({line.substr(0, c1), *cls, wfdb::detail::parse_double(line.substr(c2 + 1), lineno, "score")});
  }
  return out;
}

inline evaluate::MetricsReport eval(const RunConfig& cfg) {
  const Paths p{cfg.out_dir};
  const auto scored = read_scores_csv(read_required(p.scores()));
  const auto ref = read_scores_csv(read_required(p.train_scores()));
  std::vector<double> ref_scores;
  for (const auto& b : ref) ref_scores.push_back(b.score);
  const double thr = evaluate::select_threshold(ref_scores, cfg.threshold_quantile);
  const auto report = evaluate::confusion_metrics(scored, thr);
  std::ostringstream roc;
  bool both = false;
  for (const auto& b : scored) both |= b.is_anomalous() != scored.front().is_anomalous();
  evaluate::write_roc_csv(roc, both ? evaluate::roc_curve(scored) : std::vector<evaluate::RocPoint>{});
  write_file(p.roc(), roc.str());
  write_file(p.metrics(), evaluate::metrics_json(report).dump(2) + "\n");
  return report;
}

}  // namespace ebgame::pipeline
