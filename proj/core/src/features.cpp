#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "lark/errors.hpp"
#include "lark/features.hpp"

namespace lark {
namespace {

// FFTW's planner is not re-entrant; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int n_mels, int fft_size, double sample_rate, double f_min,
                             double f_max)
    : fft_size_(fft_size), sample_rate_(sample_rate), f_min_(f_min) {
  if (n_mels < 1) throw Error(ErrorKind::kArgument, "n_mels must be positive");
  if (fft_size < 2) throw Error(ErrorKind::kArgument, "fft size must be at least 2");
  if (!(sample_rate > 0.0)) throw Error(ErrorKind::kArgument, "sample rate must be positive");
  f_max_ = f_max < 0.0 ? sample_rate / 2.0 : f_max;
  if (f_min_ < 0.0 || f_max_ <= f_min_ || f_max_ > sample_rate / 2.0) {
    throw Error(ErrorKind::kArgument, "invalid filterbank frequency range");
  }

  const int n_bins = fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(f_min_);
  const double mel_hi = hz_to_mel(f_max_);
  std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_mels + 1));
  }

  weights_ = Eigen::MatrixXd::Zero(n_mels, n_bins);
  centers_.resize(static_cast<std::size_t>(n_mels));
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double center = edges[static_cast<std::size_t>(m) + 1];
    const double right = edges[static_cast<std::size_t>(m) + 2];
    centers_[static_cast<std::size_t>(m)] = center;
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * sample_rate / fft_size;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      weights_(m, k) = w;
    }
    if (weights_.row(m).maxCoeff() <= 0.0) {
      throw Error(ErrorKind::kArgument,
                  "mel filter " + std::to_string(m) + " covers no FFT bin; too many mels");
    }
  }
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    w[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  }
  return w;
}

struct PowerSpectrum::Impl {
  int n = 0;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;
};

PowerSpectrum::PowerSpectrum(int fft_size) : impl_(std::make_unique<Impl>()) {
  if (fft_size < 2) throw Error(ErrorKind::kArgument, "fft size must be at least 2");
  impl_->n = fft_size;
  std::lock_guard lock(planner_mutex());
  impl_->in = fftw_alloc_real(static_cast<std::size_t>(fft_size));
  impl_->out = fftw_alloc_complex(static_cast<std::size_t>(fft_size / 2 + 1));
  impl_->plan = fftw_plan_dft_r2c_1d(fft_size, impl_->in, impl_->out, FFTW_ESTIMATE);
}

PowerSpectrum::~PowerSpectrum() {
  if (!impl_) return;
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->plan);
  fftw_free(impl_->in);
  fftw_free(impl_->out);
}

PowerSpectrum::PowerSpectrum(PowerSpectrum&&) noexcept = default;
PowerSpectrum& PowerSpectrum::operator=(PowerSpectrum&&) noexcept = default;

int PowerSpectrum::fft_size() const { return impl_->n; }

Eigen::VectorXd PowerSpectrum::compute(std::span<const double> frame) const {
  const int n = impl_->n;
  if (static_cast<int>(frame.size()) > n) {
    throw Error(ErrorKind::kShape, "frame longer than fft size");
  }
  std::fill(impl_->in, impl_->in + n, 0.0);
  std::copy(frame.begin(), frame.end(), impl_->in);
  fftw_execute(impl_->plan);
  Eigen::VectorXd power(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    const double re = impl_->out[k][0];
    const double im = impl_->out[k][1];
    power[k] = (re * re + im * im) / n;
  }
  return power;
}

LogMelSpectrogram log_mel_spectrogram(const AudioClip& clip, const MelFilterbank& fb) {
  if (clip.sample_rate() != fb.sample_rate()) {
    throw Error(ErrorKind::kArgument, "clip sample rate " + std::to_string(clip.sample_rate()) +
                                          " does not match filterbank rate " +
                                          std::to_string(fb.sample_rate()));
  }
  const int window = static_cast<int>(std::lround(clip.sample_rate() / kFrameRate));
  if (window > fb.fft_size()) throw Error(ErrorKind::kArgument, "window exceeds fft size");
  const auto n_frames = static_cast<Eigen::Index>(clip.size() / static_cast<std::size_t>(window));
  if (n_frames == 0) {
    throw Error(ErrorKind::kEmptyInput, "clip shorter than one 40 ms window");
  }

  const auto hann = hann_window(window);
  const PowerSpectrum fft(fb.fft_size());
  LogMelSpectrogram spec;
  spec.frame_rate = kFrameRate;
  spec.frames.resize(n_frames, fb.n_mels());

  const auto samples = clip.samples();
  std::vector<double> frame(static_cast<std::size_t>(window));
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * static_cast<std::size_t>(window);
    for (int n = 0; n < window; ++n) {
      frame[static_cast<std::size_t>(n)] =
          samples[start + static_cast<std::size_t>(n)] * hann[static_cast<std::size_t>(n)];
    }
    const Eigen::VectorXd mel = fb.apply(fft.compute(frame));
    for (int m = 0; m < fb.n_mels(); ++m) {
      spec.frames(t, m) = std::log(std::max(mel[m], kLogFloor));
    }
  }
  return spec;
}

FeatureSequence temporal_differences(const LogMelSpectrogram& spec) {
  const Eigen::Index T = spec.frames.rows();
  const Eigen::Index M = spec.frames.cols();
  if (T < 3) {
    throw Error(ErrorKind::kSequenceTooShort,
                "temporal differences need at least 3 frames, got " + std::to_string(T));
  }
  FeatureSequence out;
  out.frame_rate = spec.frame_rate;
  out.frames = FrameMatrix::Zero(T, 2 * M);
  for (Eigen::Index t = 1; t < T; ++t) {
    out.frames.row(t).head(M) = spec.frames.row(t) - spec.frames.row(t - 1);
  }
  for (Eigen::Index t = 2; t < T; ++t) {
    out.frames.row(t).tail(M) = out.frames.row(t).head(M) - out.frames.row(t - 1).head(M);
  }
  return out;
}

FrameMatrix stack_context(const FrameMatrix& features, int context) {
  if (context < 1) throw Error(ErrorKind::kArgument, "context must be at least 1");
  const Eigen::Index T = features.rows();
  const Eigen::Index D = features.cols();
  FrameMatrix out = FrameMatrix::Zero(T, D * context);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int b = 0; b < context; ++b) {
      const Eigen::Index src = t - (context - 1) + b;
      if (src >= 0) out.block(t, b * D, 1, D) = features.row(src);
    }
  }
  return out;
}

FeatureSequence extract_features(const AudioClip& clip) {
  static const MelFilterbank fb;
  const AudioClip canonical =
      clip.sample_rate() == kCanonicalSampleRate ? clip : resample(clip, kCanonicalSampleRate);
  return temporal_differences(log_mel_spectrogram(canonical, fb));
}

}  // namespace lark
