#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lark/features.hpp"
#include "lark/landmarks.hpp"

namespace lark {

inline constexpr int kSequenceFrames = 75;
inline constexpr int kMaxFrameMismatch = 2;

enum class Split { kTrain, kValidation, kTest, kAuto };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);  // train | val | test | auto

struct ManifestEntry {
  std::filesystem::path audio_path;
  std::filesystem::path landmark_path;
  std::string speaker;
  Split split = Split::kAuto;
};

// One entry per line: audio_path<TAB>landmark_path<TAB>speaker_id<TAB>split.
// Blank lines and lines starting with '#' are skipped; relative paths resolve
// against `base_dir`.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {});
DatasetManifest read_manifest(const std::filesystem::path& path);
std::string format_manifest(const DatasetManifest& manifest);

// Resolves `auto` tags: per speaker the utterances are shuffled with `seed`,
// then validation picks are taken round-robin across speakers until 10% of
// the auto entries (at least one when there are two or more) are held out.
std::vector<Split> assign_splits(const DatasetManifest& manifest, std::uint64_t seed);

struct Utterance {
  std::size_t manifest_index = 0;
  std::string speaker;
  Split split = Split::kTrain;
  std::filesystem::path audio_path;
  std::filesystem::path landmark_path;
  FeatureSequence features;  // T x 128
  LandmarkSequence targets;  // T frames, normalized, aligned, identity removed
};

struct EntryDiagnostic {
  std::size_t manifest_index = 0;
  std::string message;
};

struct Dataset {
  std::vector<Utterance> utterances;  // manifest order
  MeanFace mean_face;
  std::vector<EntryDiagnostic> rejected;
};

struct BuildOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  // When set, identity removal uses this mean face instead of computing one
  // from the training split.
  std::optional<MeanFace> mean_face;
};

// Per entry: audio -> 44.1 kHz -> log-mel -> differences; landmarks -> 25 FPS
// -> normalized -> aligned. Audio and landmark frame counts may differ by at
// most two frames (both are truncated to the shorter). The mean face comes
// from the aligned training split; every entry then has identity removed.
// Failing entries are reported in `rejected`; throws only if all fail.
Dataset build_dataset(const DatasetManifest& manifest, const BuildOptions& options);

// A window [start, start + length) of one utterance; `length` <= 75.
struct Chunk {
  std::size_t utterance = 0;
  Eigen::Index start = 0;
  Eigen::Index length = 0;
};

// Non-overlapping 75-frame windows; the tail window may be shorter and is
// padded (and masked) at batch time.
std::vector<Chunk> split_into_chunks(const std::vector<Utterance>& utterances,
                                     Split split = Split::kTrain,
                                     Eigen::Index chunk_frames = kSequenceFrames);

// Directory layout: index.tsv, utt_NNNNN.lark (tensor archives holding
// `features` and `targets`), mean_face.txt.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace lark
