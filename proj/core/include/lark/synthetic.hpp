#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lark/audio.hpp"
#include "lark/dataset.hpp"
#include "lark/landmark_io.hpp"
#include "lark/landmarks.hpp"
#include "lark/rng.hpp"

namespace lark {

// A plausible 68-point face in normalized canonical coordinates with a closed
// mouth and the outer eye corners exactly on the pins.
LandmarkFrame template_face();

struct Segment {
  enum class Kind { kSilence, kTone, kNoise };
  Kind kind = Kind::kSilence;
  double seconds = 0.0;
  double frequency = 0.0;  // tones only
  double amplitude = 0.0;  // peak for tones, RMS for noise
};

// Per-speaker face shape and placement in a 720 x 576 source frame.
struct SpeakerStyle {
  std::string id;
  Eigen::Matrix<double, kNumLandmarks, 2> shape_offset =
      Eigen::Matrix<double, kNumLandmarks, 2>::Zero();  // normalized units
  SimilarityTransform placement;                         // normalized -> source pixels
};

SpeakerStyle make_speaker(const std::string& id, Rng& rng);

inline constexpr double kSourceWidth = 720.0;
inline constexpr double kSourceHeight = 576.0;
inline constexpr double kMaxMouthOpening = 0.06;  // normalized units at full energy

// Per-frame RMS over non-overlapping 40 ms frames.
std::vector<double> frame_rms(const AudioClip& clip);

// opening_t = 0.06 * smooth(min(1, rms_t / 0.3)), smoothing kernel
// [1/4, 1/2, 1/4] with edge replication.
std::vector<double> mouth_opening(const AudioClip& clip);

// Template face (plus speaker shape offset) with the jaw and lower lip
// lowered by `opening`, in normalized canonical coordinates.
LandmarkFrame face_with_opening(const SpeakerStyle& speaker, double opening);

struct SyntheticUtterance {
  AudioClip audio;
  LandmarkFile landmarks;  // source pixel coordinates
  std::vector<double> opening;
};

std::vector<Segment> random_segments(double seconds, Rng& rng);

SyntheticUtterance synthesize_utterance(const std::vector<Segment>& segments,
                                        const SpeakerStyle& speaker, Rng& rng,
                                        double sample_rate = kCanonicalSampleRate);

struct SyntheticOptions {
  std::uint64_t seed = 0;
  int n_utterances = 8;
  int n_speakers = 4;
  double seconds = 3.0;
};

// Writes audio/utt_NNNN.wav, landmarks/utt_NNNN.txt and manifest.tsv (split
// tag `auto`, paths relative to out_dir). Identical seeds give identical bytes.
DatasetManifest generate_synthetic_dataset(const std::filesystem::path& out_dir,
                                           const SyntheticOptions& options);

}  // namespace lark
