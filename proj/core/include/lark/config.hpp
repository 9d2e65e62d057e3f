#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lark/training.hpp"

namespace lark {

// Every setting a subcommand may read. Loaded from flat `key = value` text
// (`#` starts a comment); command-line flags are applied afterwards through
// the same setter, so both paths share validation.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;

  // paths
  std::string manifest;
  std::string data_dir;
  std::string out_dir;
  std::string checkpoint;
  std::string wav;
  std::string output;
  std::string render_dir;
  std::string landmarks;
  std::string overlay;
  std::string mean_face;

  TrainConfig train;

  // synthdata
  int n_utterances = 8;
  int n_speakers = 4;
  double seconds = 3.0;

  // render
  int canvas = 600;
};

// Sets one key; kArgument for unknown keys or unparsable values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
std::vector<std::string> config_keys();

RunConfig parse_config_text(std::string_view text, RunConfig base = {});
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});

// `key = value` for every key, in config_keys() order; reparses to the same
// config.
std::string format_config(const RunConfig& config);

}  // namespace lark
