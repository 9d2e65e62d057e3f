#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <map>
#include <string>
#include <vector>

#include "commands.hpp"
#include "lark/errors.hpp"
#include "lark/parallel.hpp"

namespace {

using lark::cli::ExitCode;

// Maps a flag onto a config key; only flags given on the command line are
// applied, after the config file.
class Overrides {
 public:
  void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option(flag, values_[key], help);
    options_.emplace_back(app, flag, key);
  }

  void apply(lark::RunConfig& config) const {
    for (const auto& [app, flag, key] : options_) {
      if (app->count(flag) > 0) lark::set_config_value(config, key, values_.at(key));
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::tuple<CLI::App*, std::string, std::string>> options_;
};

int exit_code_for(lark::ErrorKind kind) {
  switch (kind) {
    case lark::ErrorKind::kArgument: return ExitCode::kUsage;
    case lark::ErrorKind::kNumeric: return ExitCode::kNumericFailure;
    default: return ExitCode::kDataError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("lark");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

  CLI::App app{"lark: talking-face landmark generation from speech"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  Overrides overrides;
  app.add_option("--config", config_path, "Flat key = value configuration file")->check(CLI::ExistingFile);
  overrides.bind(&app, "--seed", "seed", "Random seed");
  overrides.bind(&app, "--threads", "threads", "Worker threads for preprocessing and rendering");
  app.add_option("--set", sets, "Override any config key (key=value); repeatable");

  auto* pre = app.add_subcommand("preprocess", "Manifest -> feature/target tensors + mean face");
  overrides.bind(pre, "--manifest", "manifest", "Dataset manifest (TSV)");
  overrides.bind(pre, "--out", "out_dir", "Output directory");
  overrides.bind(pre, "--mean-face", "mean_face", "Reuse an existing mean-face file");

  auto* tr = app.add_subcommand("train", "Train the model grid, evaluate and select");
  overrides.bind(tr, "--data", "data_dir", "Preprocessed dataset directory");
  overrides.bind(tr, "--out", "out_dir", "Checkpoint/report directory");
  overrides.bind(tr, "--grid", "grid", "Grid points, e.g. D40-C5,D0-C3 or 'full'");
  overrides.bind(tr, "--epochs", "epochs", "Training epochs per grid point");
  overrides.bind(tr, "--batch-size", "batch_size", "Sequences per batch");
  overrides.bind(tr, "--learning-rate", "learning_rate", "Adam learning rate");
  overrides.bind(tr, "--layers", "num_layers", "LSTM layers");
  overrides.bind(tr, "--hidden-size", "hidden_size", "Units per LSTM layer");
  overrides.bind(tr, "--dropout", "dropout_rate", "Dropout rate");
  overrides.bind(tr, "--grid-threads", "grid_threads", "Grid points trained concurrently");

  std::string split = "val";
  auto* ev = app.add_subcommand("evaluate", "RMSE report for one checkpoint");
  overrides.bind(ev, "--checkpoint", "checkpoint", "Checkpoint file");
  overrides.bind(ev, "--data", "data_dir", "Preprocessed dataset directory");
  overrides.bind(ev, "--out", "output", "Write key-value report here");
  ev->add_option("--split", split, "Split to evaluate (train|val|test)");

  lark::cli::GenerateExtras extras;
  auto* gen = app.add_subcommand("generate", "Speech -> landmark sequence");
  overrides.bind(gen, "--checkpoint", "checkpoint", "Checkpoint file");
  overrides.bind(gen, "--wav", "wav", "Input WAV file");
  overrides.bind(gen, "--out", "output", "Output landmark file");
  overrides.bind(gen, "--render-dir", "render_dir", "Also render frames here");
  overrides.bind(gen, "--canvas", "canvas", "Render canvas size in pixels");
  gen->add_option("--timing-file", extras.timing_file, "Write measured inference time here");

  auto* ren = app.add_subcommand("render", "Landmark file -> numbered PNG frames + index");
  overrides.bind(ren, "--landmarks", "landmarks", "Landmark file (ground truth / black)");
  overrides.bind(ren, "--overlay", "overlay", "Second landmark file drawn red dashed");
  overrides.bind(ren, "--out", "out_dir", "Output directory");
  overrides.bind(ren, "--canvas", "canvas", "Canvas size in pixels");

  auto* syn = app.add_subcommand("synthdata", "Write a deterministic synthetic dataset");
  overrides.bind(syn, "--out", "out_dir", "Output directory");
  overrides.bind(syn, "--utterances", "n_utterances", "Number of utterances");
  overrides.bind(syn, "--speakers", "n_speakers", "Number of speakers");
  overrides.bind(syn, "--seconds", "seconds", "Utterance length in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ExitCode::kOk : ExitCode::kUsage;
  }

  try {
    lark::RunConfig config;
    config.threads = lark::default_threads();
    if (!config_path.empty()) config = lark::load_config_file(config_path, config);
    overrides.apply(config);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw lark::Error(lark::ErrorKind::kArgument, "--set expects key=value");
      lark::set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    spdlog::info("resolved config:\n{}", lark::format_config(config));

    if (pre->parsed()) return lark::cli::cmd_preprocess(config);
    if (tr->parsed()) return lark::cli::cmd_train(config);
    if (ev->parsed()) return lark::cli::cmd_evaluate(config, split);
    if (gen->parsed()) return lark::cli::cmd_generate(config, extras);
    if (ren->parsed()) return lark::cli::cmd_render(config);
    if (syn->parsed()) return lark::cli::cmd_synthdata(config);
  } catch (const lark::Error& e) {
    spdlog::error("{}", e.what());
    if (e.kind() == lark::ErrorKind::kArgument) std::fputs(app.help().c_str(), stderr);
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return ExitCode::kDataError;
  }
  return ExitCode::kUsage;
}
