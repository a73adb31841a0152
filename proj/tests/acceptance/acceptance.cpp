// Acceptance report: one PASS/FAIL/SKIP line per criterion. Exits 1 if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "../gradcheck.hpp"
#include "ebgame/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ebgame;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
  if (!pass) ++failures;
}

void skip(int id, const std::string& name, const std::string& why) {
  std::cout << "SKIP [" << id << "] " << name << ": " << why << std::endl;
}

std::string num(double v) { return training::format_real(v); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(EBGAME_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return fs::exists(p) ? wfdb::read_text(p) : std::string{}; }

std::optional<double> read_auroc(const fs::path& metrics) {
  const auto j = nlohmann::json::parse(slurp(metrics), nullptr, false);
  if (j.is_discarded() || !j.contains("auroc") || j["auroc"].is_null()) return std::nullopt;
  return j["auroc"].get<double>();
}

// (first, last) l_mae from a loss history file.
std::optional<std::pair<double, double>> mae_endpoints(const fs::path& history) {
  std::istringstream is(slurp(history));
  std::string line;
  std::vector<double> mae;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::istringstream row(line);
    std::string epoch, v;
    std::getline(row, epoch, ',');
    std::getline(row, v, ',');
    mae.push_back(std::stod(v));
  }
  if (mae.empty()) return std::nullopt;
  return std::pair{mae.front(), mae.back()};
}

// ---- 1 ------------------------------------------------------------------

void criterion_mitbih(const fs::path& work) {
  const char* dir = std::getenv("EBGAME_MITBIH_DIR");
  const std::string name = "MIT-BIH smoke (5000 N train, 1500 mixed test, AUROC >= 0.80, <= 60 min)";
  if (!dir || !*dir) {
    skip(1, name, "EBGAME_MITBIH_DIR not set");
    return;
  }
  const fs::path out = work / "mitbih";
  const fs::path cfg = work / "mitbih.cfg";
  std::ofstream(cfg) << "train_limit = 5000\ntest_limit = 1500\nseed = 7\n";
  const auto t0 = std::chrono::steady_clock::now();
  const int code = run_cli("all --config " + cfg.string() + " --data-dir " + dir + " --out " + out.string(),
                           work / "mitbih.log");
  const double secs = seconds_since(t0);
  const auto auroc = read_auroc(out / "metrics.txt");
  report(1, name, code == 0 && auroc && *auroc >= 0.80 && secs <= 3600.0,
         "exit " + std::to_string(code) + ", AUROC " + (auroc ? num(*auroc) : "n/a") + ", " + num(secs) + " s");
}

// ---- 2 ------------------------------------------------------------------

model::ModelConfig micro_config() {
  model::ModelConfig c;
  c.image_size = 4;
  c.patch_size = 2;
  c.embed_dim = 4;
  c.encoder_depth = 1;
  c.decoder_dim = 4;
  c.decoder_depth = 1;
  c.disc_dim = 4;
  c.disc_depth = 1;
  c.num_heads = 2;
  c.mlp_ratio = 2;
  return c;
}

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2);
  using testing::random_tensor;
  std::map<std::string, double> worst;
  auto check = [&](const std::string& op, std::vector<Tensor*> params, const std::function<Var(Graph&)>& out_fn,
                   Shape out_shape) {
    const Tensor w = random_tensor(std::move(out_shape), rng);
    const auto r = testing::check_gradients(params, [&](Graph& g) {
      return testing::random_projection(g, out_fn(g), w);
    });
    worst[op] = std::max(worst[op], r.max_rel_error);
  };
  Tensor a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng), c = random_tensor({4, 2}, rng);
  Tensor bias = random_tensor({4}, rng), gain = random_tensor({4}, rng, 0.5, 1.5), row = random_tensor({1, 4}, rng);
  Tensor pos = random_tensor({3, 4}, rng, 0.1, 0.9);
  Tensor away = random_tensor({3, 4}, rng, 0.2, 1.0);
  for (std::size_t i = 0; i < away.size(); ++i)
    if (i % 2) away[i] = -away[i];
  auto P = [](Graph& g, Tensor& t) { return g.parameter(t); };
  check("add", {&a, &b}, [&](Graph& g) { return ops::add(P(g, a), P(g, b)); }, {3, 4});
  check("sub", {&a, &b}, [&](Graph& g) { return ops::sub(P(g, a), P(g, b)); }, {3, 4});
  check("mul", {&a, &b}, [&](Graph& g) { return ops::mul(P(g, a), P(g, b)); }, {3, 4});
  check("affine", {&a}, [&](Graph& g) { return ops::affine(P(g, a), -1.5, 0.25); }, {3, 4});
  check("square", {&a}, [&](Graph& g) { return ops::square(P(g, a)); }, {3, 4});
  check("abs", {&away}, [&](Graph& g) { return ops::abs(P(g, away)); }, {3, 4});
  check("sigmoid", {&a}, [&](Graph& g) { return ops::sigmoid(P(g, a)); }, {3, 4});
  check("log_clamped", {&pos}, [&](Graph& g) { return ops::log_clamped(P(g, pos), 1e-7, 1.0 - 1e-7); }, {3, 4});
  check("gelu", {&a}, [&](Graph& g) { return ops::gelu(P(g, a)); }, {3, 4});
  check("sum", {&a}, [&](Graph& g) { return ops::sum(P(g, a)); }, {1});
  check("mean", {&a}, [&](Graph& g) { return ops::mean(P(g, a)); }, {1});
  check("weighted_sum", {&a, &b}, [&](Graph& g) {
    const std::vector<Var> t{ops::sum(P(g, a)), ops::mean(P(g, b))};
    const std::vector<double> w{0.3, -2.0};
    return ops::weighted_sum(t, w);
  }, {1});
  check("matmul", {&a, &c}, [&](Graph& g) { return ops::matmul(P(g, a), P(g, c)); }, {3, 2});
  check("transpose", {&a}, [&](Graph& g) { return ops::transpose(P(g, a)); }, {4, 3});
  check("add_bias", {&a, &bias}, [&](Graph& g) { return ops::add_bias(P(g, a), P(g, bias)); }, {3, 4});
  check("softmax", {&a}, [&](Graph& g) { return ops::softmax(P(g, a), 1); }, {3, 4});
  check("softmax", {&a}, [&](Graph& g) { return ops::softmax(P(g, a), 0); }, {3, 4});
  check("layer_norm", {&a, &gain, &bias}, [&](Graph& g) {
    return ops::layer_norm(P(g, a), P(g, gain), P(g, bias));
  }, {3, 4});
  check("gather_rows", {&a}, [&](Graph& g) { return ops::gather_rows(P(g, a), {2, 0, 2}); }, {3, 4});
  check("merge_rows", {&a, &b}, [&](Graph& g) {
    return ops::merge_rows(6, P(g, a), {0, 3, 4}, P(g, b), {1, 2, 5});
  }, {6, 4});
  check("repeat_row", {&row}, [&](Graph& g) { return ops::repeat_row(P(g, row), 3); }, {3, 4});
  check("slice_cols", {&a}, [&](Graph& g) { return ops::slice_cols(P(g, a), 1, 3); }, {3, 2});
  check("concat_cols", {&a, &b}, [&](Graph& g) { return ops::concat_cols({P(g, a), P(g, b)}); }, {3, 8});
  auto lin = nn::make_linear(4, 3, rng, 0.5);
  check("linear", {&a, &lin.weight, &lin.bias}, [&](Graph& g) { return nn::linear(g, lin, P(g, a)); }, {3, 3});
  auto block = nn::make_block(4, 8, rng);
  for (auto* t : {&block.attn.query.bias, &block.attn.value.bias, &block.mlp.fc1.bias})
    *t = random_tensor(t->shape(), rng, -0.5, 0.5);
  std::vector<Tensor*> block_params{&a};
  nn::visit(block, "block", [&](const std::string&, Tensor& t) { block_params.push_back(&t); });
  check("transformer_block", block_params, [&](Graph& g) { return nn::transformer_block(g, block, P(g, a), 2); },
        {3, 4});

  // Full objective on the micro model, generator and discriminator sides.
  const auto cfg = micro_config();
  auto gen = model::make_generator(cfg, rng);
  gen.pixel_head = nn::make_linear(cfg.decoder_dim, 4, rng, 0.5);
  auto disc = model::make_discriminator(cfg, rng);
  disc.head = nn::make_linear(cfg.disc_dim, 1, rng, 0.5);
  std::vector<double> img(16);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : img) v = u(rng);
  const auto seq = model::patchify(img, cfg.grid());
  const auto mask = model::mask_from_columns(cfg.grid(), {1});
  const training::LossWeights w{0.1, 1.0};
  worst["objective (generator)"] =
      testing::check_gradients(model::parameter_list(gen), [&](Graph& g) {
        const auto rec = model::generate(g, gen, seq, mask);
        return training::loss_total(
            training::loss_mae(g, seq, *rec.masked, mask),
            training::loss_adv_generator(model::discriminate(g, std::as_const(disc), *rec.masked, mask.masked)),
            training::loss_con(g.constant(seq.patches), rec.composed), w);
      }).max_rel_error;
  const auto visible = model::partition_patches(seq, mask).visible.as_tensor();
  Tensor fake = random_tensor({2, 4}, rng, 0.0, 1.0);
  worst["objective (discriminator)"] =
      testing::check_gradients(model::parameter_list(disc), [&](Graph& g) {
        return training::loss_adv_discriminator(model::discriminate(g, disc, g.constant(visible), mask.visible),
                                                model::discriminate(g, disc, g.constant(fake), mask.masked));
      }).max_rel_error;

  double max_err = 0.0;
  std::string worst_op;
  for (const auto& [op, e] : worst)
    if (e >= max_err) {
      max_err = e;
      worst_op = op;
    }
  const double secs = seconds_since(t0);
  report(2, "gradient check (every op + full objective, rel err <= 1e-4, < 60 s)", max_err <= 1e-4 && secs < 60.0,
         std::to_string(worst.size()) + " checks, max rel err " + num(max_err) + " (" + worst_op + "), " +
             num(secs) + " s");
}

// ---- 3 ------------------------------------------------------------------

void criterion_masks() {
  const auto grid = model::PatchGrid::create(128, 128, 16);
  const std::size_t want_cols = static_cast<std::size_t>(std::lround(0.3 * 8));
  std::mt19937_64 rng(3);
  std::size_t violations = 0;
  for (int draw = 0; draw < 10000; ++draw) {
    const auto m = model::sample_wave_mask(grid, 0.3, rng);
    std::set<std::size_t> expected;
    for (std::size_t c : m.columns)
      for (std::size_t r = 0; r < grid.rows(); ++r) expected.insert(r * grid.cols() + c);
    const std::set<std::size_t> got(m.masked.begin(), m.masked.end());
    if (got != expected || m.masked.size() != grid.rows() * m.columns.size() || m.columns.size() != want_cols ||
        m.masked.size() + m.visible.size() != grid.num_patches()) {
      ++violations;
    }
  }
  report(3, "mask invariants (10^4 draws, 8x8 grid, ratio 0.3)", violations == 0,
         std::to_string(violations) + " violations, |C| = " + std::to_string(want_cols));
}

// ---- 4 ------------------------------------------------------------------

void criterion_losses() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_mae = 0.0, worst_con = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = 1 + trial % 3, cells = 2 + trial % 4;
    const auto grid = model::PatchGrid::create(p * cells, p * cells, p);
    std::vector<double> img(grid.image_h * grid.image_w);
    for (auto& v : img) v = u(rng);
    const auto seq = model::patchify(img, grid);
    const auto mask = model::sample_wave_mask(grid, 0.4, rng);
    Tensor pred({mask.masked.size(), grid.patch_len()});
    for (auto& v : pred.data()) v = u(rng);
    double sum = 0.0;
    for (std::size_t i = 0; i < mask.masked.size(); ++i)
      for (std::size_t j = 0; j < grid.patch_len(); ++j) {
        const double d = pred.at(i, j) - seq.patches.at(mask.masked[i], j);
        sum += d * d;
      }
    Graph g;
    const double mae = training::loss_mae(g, seq, g.constant(pred), mask).value().item();
    worst_mae = std::max(worst_mae, std::abs(mae - sum / static_cast<double>(mask.masked.size() * grid.patch_len())));
    Tensor other(seq.patches.shape());
    double l1 = 0.0;
    for (std::size_t i = 0; i < other.size(); ++i) {
      other[i] = u(rng);
      l1 += std::abs(seq.patches[i] - other[i]);
    }
    const double con = training::loss_con(g.constant(seq.patches), g.constant(other)).value().item();
    worst_con = std::max(worst_con, std::abs(con - l1 / static_cast<double>(other.size())));
  }
  Graph g;
  const Var mae = g.constant(Tensor::scalar(1.0)), adv = g.constant(Tensor::scalar(2.0)),
            con = g.constant(Tensor::scalar(3.0));
  auto total = [&](double ga, double gc) { return training::loss_total(mae, adv, con, {ga, gc}).value().item(); };
  const bool linear = total(0.5, 0.0) - total(0.0, 0.0) == 0.5 * 2.0 && total(0.0, 2.0) - total(0.0, 0.0) == 6.0 &&
                      total(0.25, 0.75) == 1.0 + 0.25 * 2.0 + 0.75 * 3.0;
  report(4, "loss oracles (100 instances, 1e-12) and gamma linearity", worst_mae <= 1e-12 && worst_con <= 1e-12 && linear,
         "max |mae - oracle| " + num(worst_mae) + ", max |con - oracle| " + num(worst_con) +
             ", linearity " + (linear ? "exact" : "broken"));
}

// ---- 5 ------------------------------------------------------------------

template <class Fn>
bool survives(Fn&& fn) {
  try {
    fn();
  } catch (const ParseError&) {
  }
  return true;
}

void criterion_parsers() {
  std::vector<std::string> problems;
  // Format 212 identity on 10^4 samples.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> s12(wfdb::kSampleMin, wfdb::kSampleMax);
  wfdb::SignalFrame frame;
  frame.channels.assign(2, std::vector<int>(5000));
  for (auto& ch : frame.channels)
    for (auto& v : ch) v = s12(rng);
  const auto bytes212 = wfdb::encode_format212(frame);
  if (!(wfdb::decode_format212(bytes212, 5000, 2) == frame)) problems.push_back("format 212 round trip");

  // SKIP and AUX escapes, assembled by hand.
  const std::vector<std::uint8_t> atr{0x64, 0x04, 0x00, 0xEC, 0x01, 0x00, 0x70, 0x11, 0x14, 0x14, 0x1E,
                                      0x70, 0x03, 0xFC, 0x28, 0x56, 0x54, 0x00, 0x0A, 0x04, 0x00, 0x00};
  const auto anns = wfdb::parse_annotations(atr).annotations;
  const std::vector<std::pair<std::uint64_t, std::string>> want{
      {100, "N"}, {70120, "V"}, {70150, "+"}, {70160, "N"}};
  bool ann_ok = anns.size() == want.size();
  for (std::size_t i = 0; ann_ok && i < want.size(); ++i)
    ann_ok = anns[i].sample_index == want[i].first && wfdb::code_symbol(anns[i].code) == want[i].second &&
             anns[i].aux.has_value() == (i == 2);
  ann_ok = ann_ok && *anns[2].aux == "(VT";
  if (!ann_ok) problems.push_back("annotation fixture");

  const std::string hea =
      "100 2 360 650000 0:0:0 0/0/0\n100.dat 212 200 11 1024 995 -22131 0 MLII\n"
      "100.dat 212 200 11 1024 1011 20052 0 V5\n# 69 M 1085 1629 x1\n";
  const auto h = wfdb::parse_header(hea);
  const bool hea_ok = h.record_name == "100" && h.num_signals == 2 && h.sampling_frequency == 360.0 &&
                      h.num_samples == 650000 && h.signals.size() == 2 && h.signals[0].file_name == "100.dat" &&
                      h.signals[0].format == 212 && h.signals[0].gain == 200.0 && h.signals[0].baseline == 1024 &&
                      h.signals[0].adc_resolution == 11 && h.signals[0].adc_zero == 1024 &&
                      h.signals[0].initial_value == 995 && h.signals[0].checksum == -22131 &&
                      h.signals[0].description == "MLII" && h.signals[1].initial_value == 1011 &&
                      h.signals[1].checksum == 20052 && h.signals[1].description == "V5";
  if (!hea_ok) problems.push_back("header fixture");

  // Every truncation of each input either parses or raises ParseError.
  std::size_t cases = 0;
  try {
    for (std::size_t n = 0; n < atr.size(); ++n, ++cases)
      survives([&] { wfdb::parse_annotations(std::span(atr).first(n)); });
    for (std::size_t n = 0; n < 600; ++n, ++cases)
      survives([&] { wfdb::decode_format212(std::span(bytes212).first(n), 5000, 2); });
    for (std::size_t n = 0; n < hea.size(); ++n, ++cases) survives([&] { wfdb::parse_header(hea.substr(0, n)); });
    std::uniform_int_distribution<int> byte(0, 255);
    for (int t = 0; t < 20000; ++t, ++cases) {
      std::vector<std::uint8_t> junk(static_cast<std::size_t>(t % 48));
      for (auto& x : junk) x = static_cast<std::uint8_t>(byte(rng));
      survives([&] { wfdb::parse_annotations(junk); });
    }
  } catch (const std::exception& e) {
    problems.push_back(std::string("fuzz raised a non-parse error: ") + e.what());
  }
  std::string detail = std::to_string(cases) + " fuzz cases";
  for (const auto& p : problems) detail += "; " + p + " failed";
  report(5, "parser round trips and fixtures", problems.empty(), detail);
}

// ---- 6 ------------------------------------------------------------------

void criterion_table() {
  using beats::AamiClass;
  const std::map<std::string, AamiClass> table{
      {"N", AamiClass::N}, {"L", AamiClass::N}, {"R", AamiClass::N}, {"e", AamiClass::N}, {"j", AamiClass::N},
      {"A", AamiClass::S}, {"a", AamiClass::S}, {"J", AamiClass::S}, {"S", AamiClass::S}, {"V", AamiClass::V},
      {"E", AamiClass::V}, {"F", AamiClass::F}, {"/", AamiClass::Q}, {"f", AamiClass::Q}, {"Q", AamiClass::Q}};
  std::size_t mismatches = 0, beat_codes = 0;
  for (const auto& [sym, cls] : table) {
    const auto got = beats::map_aami(sym);
    if (!got || *got != cls) ++mismatches;
  }
  for (int code = 1; code <= wfdb::kMaxBeatCode; ++code) {
    const auto sym = wfdb::code_symbol(code);
    if (beats::map_aami(sym)) {
      ++beat_codes;
      if (!table.count(std::string(sym))) ++mismatches;
    }
  }
  report(6, "AAMI class mapping (15 symbols)", mismatches == 0 && beat_codes == 15,
         std::to_string(mismatches) + " mismatches, " + std::to_string(beat_codes) + " beat codes mapped");
}

// ---- 7 and 10 -----------------------------------------------------------

void criterion_synthetic(const fs::path& work) {
  const fs::path out_a = work / "synthetic_a", out_b = work / "synthetic_b";
  const auto t0 = std::chrono::steady_clock::now();
  const int code = run_cli("all --synthetic --seed 7 --out " + out_a.string(), work / "synthetic_a.log");
  const double secs = seconds_since(t0);
  const auto mae = mae_endpoints(out_a / "loss_history.csv");
  const auto echo = pipeline::parse_config(slurp(out_a / "config.echo"));
  const bool setup = code == 0 && echo.synth_train == 512 && echo.train.epochs <= 30 && secs <= 600.0;
  const std::string run = "exit " + std::to_string(code) + ", " + std::to_string(echo.train.epochs) + " epochs, " +
                          num(secs) + " s";
  report(7, "synthetic run: final l_mae <= 0.5 x first (a)",
         setup && mae && mae->second <= 0.5 * mae->first,
         mae ? "l_mae " + num(mae->first) + " -> " + num(mae->second) + " (ratio " +
                   num(mae->second / mae->first) + "), " + run
             : "no loss history, " + run);
  const auto auroc = read_auroc(out_a / "metrics.txt");
  std::string per_class;
  if (fs::exists(out_a / "scores.csv")) {
    const auto scored = pipeline::read_scores_csv(slurp(out_a / "scores.csv"));
    for (auto cls : {beats::AamiClass::V, beats::AamiClass::S, beats::AamiClass::F}) {
      std::vector<evaluate::ScoredBeat> sub;
      for (const auto& b : scored)
        if (b.true_class == cls || !b.is_anomalous()) sub.push_back(b);
      per_class += std::string(" ") + beats::to_char(cls) + "=" + num(std::round(evaluate::roc_auc(sub) * 1e4) / 1e4);
    }
  }
  report(7, "synthetic run: AUROC >= 0.90 on 400 test beats (b)", setup && auroc && *auroc >= 0.90,
         "AUROC " + (auroc ? num(*auroc) : std::string("n/a")) + " (normal vs" + per_class + ")");

  const int code_b = run_cli("all --synthetic --seed 7 --out " + out_b.string(), work / "synthetic_b.log");
  bool same = code_b == 0;
  std::string detail;
  for (const char* f : {"metrics.txt", "loss_history.csv"}) {
    const std::string x = slurp(out_a / f), y = slurp(out_b / f);
    const bool eq = !x.empty() && x == y;
    same = same && eq;
    detail += std::string(detail.empty() ? "" : ", ") + f + (eq ? " identical" : " differs");
  }
  report(10, "determinism (two identical runs, byte-identical outputs)", same, detail);
}

// ---- 8 ------------------------------------------------------------------

void criterion_auroc() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> level(0, 12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int set = 0; set < 50; ++set) {
    const std::size_t n = 20 + static_cast<std::size_t>(set) * 8;
    std::vector<evaluate::ScoredBeat> s;
    for (std::size_t i = 0; i < n; ++i) {
      const bool anom = i < 2 ? i == 0 : u(rng) < 0.4;
      const double score = set % 2 ? level(rng) / 4.0 : u(rng);
      s.push_back({"x", anom ? beats::AamiClass::V : beats::AamiClass::N, score});
    }
    double wins = 0.0, pairs = 0.0;
    for (const auto& a : s)
      for (const auto& b : s)
        if (a.is_anomalous() && !b.is_anomalous()) {
          pairs += 1.0;
          wins += a.score > b.score ? 1.0 : a.score == b.score ? 0.5 : 0.0;
        }
    worst = std::max(worst, std::abs(evaluate::roc_auc(s) - wins / pairs));
  }
  report(8, "AUROC vs all-pairs oracle (50 sets, ties included, 1e-12)", worst <= 1e-12, "max |diff| " + num(worst));
}

// ---- 9 ------------------------------------------------------------------

void criterion_schedule() {
  const LrSchedule s(1e-3, 100, 300);
  const double e0 = std::abs(lr_at(s, 0)), ew = std::abs(lr_at(s, 100) - 1e-3),
               em = std::abs(lr_at(s, 200) - 5e-4), ee = std::abs(lr_at(s, 300));
  const double worst = std::max({e0, ew, em, ee});
  report(9, "learning-rate schedule endpoints (1e-12)", worst <= 1e-12, "max |diff| " + num(worst));
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "ebgame_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  criterion_mitbih(work);
  criterion_gradients();
  criterion_masks();
  criterion_losses();
  criterion_parsers();
  criterion_table();
  criterion_synthetic(work);
  criterion_auroc();
  criterion_schedule();
  std::cout << (failures == 0 ? "all criteria met" : std::to_string(failures) + " criterion check(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
