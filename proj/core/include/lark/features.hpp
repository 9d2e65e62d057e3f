#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "lark/audio.hpp"

namespace lark {

inline constexpr double kFrameRate = 25.0;
inline constexpr int kWindowSamples = 1764;  // 40 ms at 44.1 kHz
inline constexpr int kFftSize = 2048;
inline constexpr int kNumMels = 64;
inline constexpr int kFeatureDim = 2 * kNumMels;
inline constexpr double kLogFloor = 1e-10;

// Row-major-by-convention matrices: one row per frame.
using FrameMatrix = Eigen::MatrixXd;

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// HTK-scale triangular filters over the one-sided FFT bins. Filter edges are
// equally spaced in mel between f_min and f_max; peaks are 1, no area
// normalization.
class MelFilterbank {
 public:
  MelFilterbank(int n_mels = kNumMels, int fft_size = kFftSize,
                double sample_rate = kCanonicalSampleRate, double f_min = 0.0,
                double f_max = -1.0);

  int n_mels() const { return static_cast<int>(weights_.rows()); }
  int n_fft_bins() const { return static_cast<int>(weights_.cols()); }
  int fft_size() const { return fft_size_; }
  double sample_rate() const { return sample_rate_; }
  double f_min() const { return f_min_; }
  double f_max() const { return f_max_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const std::vector<double>& center_frequencies() const { return centers_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& power) const { return weights_ * power; }

 private:
  int fft_size_;
  double sample_rate_;
  double f_min_;
  double f_max_;
  Eigen::MatrixXd weights_;
  std::vector<double> centers_;
};

// Periodic Hann window of the given length.
std::vector<double> hann_window(int length);

// One-sided power spectrum of a real frame zero-padded to `fft_size`:
// P_k = |X_k|^2 / fft_size for k = 0..fft_size/2. With this scaling,
// P_0 + P_{N/2} + 2 * sum(P_1..P_{N/2-1}) equals the frame's energy.
class PowerSpectrum {
 public:
  explicit PowerSpectrum(int fft_size);
  ~PowerSpectrum();
  PowerSpectrum(const PowerSpectrum&) = delete;
  PowerSpectrum& operator=(const PowerSpectrum&) = delete;
  PowerSpectrum(PowerSpectrum&&) noexcept;
  PowerSpectrum& operator=(PowerSpectrum&&) noexcept;

  int fft_size() const;
  Eigen::VectorXd compute(std::span<const double> frame) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct LogMelSpectrogram {
  FrameMatrix frames;  // T x n_mels
  double frame_rate = kFrameRate;

  Eigen::Index num_frames() const { return frames.rows(); }
};

// Columns [0, 64) hold first differences, [64, 128) second differences.
struct FeatureSequence {
  FrameMatrix frames;  // T x 128
  double frame_rate = kFrameRate;

  Eigen::Index num_frames() const { return frames.rows(); }
};

// 40 ms Hann frames with no overlap, log(max(mel power, 1e-10)).
// Requires clip.sample_rate() == fb.sample_rate().
LogMelSpectrogram log_mel_spectrogram(const AudioClip& clip, const MelFilterbank& fb);

// Adjacent-frame differences; boundary rows are zero.
FeatureSequence temporal_differences(const LogMelSpectrogram& spec);

// Row t = [feat_{t-C+1} | ... | feat_t], zero blocks before the first frame.
FrameMatrix stack_context(const FrameMatrix& features, int context);

// Resample to 44.1 kHz when needed, then log-mel and differences.
FeatureSequence extract_features(const AudioClip& clip);

}  // namespace lark
