#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lark/archive.hpp"
#include "lark/landmarks.hpp"
#include "lark/lstm.hpp"

namespace lark {

// A trained model together with everything standalone inference needs: the
// mean face and the canonical-frame constants.
struct Checkpoint {
  LstmModel model;
  MeanFace mean_face;
  std::vector<std::pair<std::string, std::string>> info;  // free-form provenance
};

Archive to_archive(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_archive(const Archive& archive);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lark
