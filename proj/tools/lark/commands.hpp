#pragma once

#include <optional>
#include <string>

#include "lark/config.hpp"

namespace lark::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericFailure = 3 };

struct GenerateExtras {
  std::optional<std::string> timing_file;
};

int cmd_preprocess(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_evaluate(const RunConfig& config, const std::string& split);
int cmd_generate(const RunConfig& config, const GenerateExtras& extras);
int cmd_render(const RunConfig& config);
int cmd_synthdata(const RunConfig& config);

}  // namespace lark::cli
