#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ebgame/pipeline.hpp"

namespace pl = ebgame::pipeline;

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> data_dir;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool synthetic = false;
  std::optional<double> mask_ratio;
  std::optional<std::size_t> patch_size;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> k_draws;

  std::vector<std::pair<std::string, std::string>> overrides() const {
    std::vector<std::pair<std::string, std::string>> o;
    if (data_dir) o.emplace_back("data_dir", *data_dir);
    if (out_dir) o.emplace_back("out_dir", *out_dir);
    if (seed) o.emplace_back("seed", std::to_string(*seed));
    if (synthetic) o.emplace_back("synthetic", "true");
    if (mask_ratio) o.emplace_back("mask_ratio", ebgame::training::format_real(*mask_ratio));
    if (patch_size) o.emplace_back("patch_size", std::to_string(*patch_size));
    if (epochs) o.emplace_back("epochs", std::to_string(*epochs));
    if (k_draws) o.emplace_back("k_draws", std::to_string(*k_draws));
    return o;
  }
};

void report(const ebgame::evaluate::MetricsReport& m) {
  std::cout << "threshold=" << ebgame::training::format_real(m.threshold) << " accuracy=" << m.accuracy
            << " sensitivity=" << m.sensitivity << " specificity=" << m.specificity << " f1=" << m.f1
            << " auroc=" << (m.auroc ? std::to_string(*m.auroc) : std::string("n/a")) << "\n";
}

void run(const std::string& cmd, const pl::RunConfig& cfg) {
  pl::write_echo(cfg);
  const bool all = cmd == "all";
  if (cmd == "ingest" || (all && !cfg.synthetic)) {
    const auto split = pl::ingest(cfg);
    std::cout << "ingest: " << split.train.size() << " train, " << split.test.size() << " test images\n";
  }
  if (cmd == "synth" || (all && cfg.synthetic)) {
    const auto split = pl::synth(cfg);
    std::cout << "synth: " << split.train.size() << " train, " << split.test.size() << " test images\n";
  }
  if (cmd == "train" || all) pl::train(cfg, &std::cout);
  if (cmd == "score" || all) std::cout << "score: " << pl::score(cfg).size() << " test beats\n";
  if (cmd == "eval" || all) report(pl::eval(cfg));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masked-autoencoder GAN heartbeat anomaly detector"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "key = value configuration file");
  app.add_option("--data-dir", f.data_dir, "directory holding WFDB records");
  app.add_option("--out", f.out_dir, "output directory");
  app.add_option("--seed", f.seed, "master seed");
  app.add_flag("--synthetic", f.synthetic, "use the synthetic corpus instead of WFDB records");
  app.add_option("--mask-ratio", f.mask_ratio, "fraction of patch columns masked");
  app.add_option("--patch-size", f.patch_size, "patch edge in pixels");
  app.add_option("--epochs", f.epochs, "training epochs");
  app.add_option("--k-draws", f.k_draws, "masks averaged per anomaly score");
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "segment WFDB records into split containers"},
      {"synth", "write a synthetic corpus as split containers"},
      {"train", "train on the training split"},
      {"score", "score the test split with a trained checkpoint"},
      {"eval", "threshold scores and write metrics"},
      {"all", "run the full pipeline"}};
  for (const auto& [name, desc] : commands) app.add_subcommand(name, desc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = pl::load_config(f.config ? std::optional<std::filesystem::path>(*f.config) : std::nullopt,
                                     f.overrides());
    run(cmd, cfg);
  } catch (const pl::MissingPathError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
