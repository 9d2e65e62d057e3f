#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace lark {

inline constexpr double kCanonicalSampleRate = 44100.0;

// Mono audio with amplitudes nominally in [-1, 1].
class AudioClip {
 public:
  AudioClip() = default;
  // Throws kArgument when sample_rate <= 0 or a sample is not finite.
  AudioClip(std::vector<double> samples, double sample_rate);

  std::span<const double> samples() const noexcept { return samples_; }
  double sample_rate() const noexcept { return sample_rate_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double duration_seconds() const noexcept {
    return sample_rate_ > 0 ? static_cast<double>(samples_.size()) / sample_rate_ : 0.0;
  }

 private:
  std::vector<double> samples_;
  double sample_rate_ = kCanonicalSampleRate;
};

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float samples.
// Channels are averaged to mono; 16-bit samples are scaled by 1/32768.
AudioClip load_wav(const std::filesystem::path& path);
AudioClip decode_wav(std::span<const unsigned char> bytes);

// Mono writer. 16-bit output clamps to [-1, 1) before quantizing.
void save_wav(const std::filesystem::path& path, const AudioClip& clip,
              WavEncoding encoding = WavEncoding::kPcm16);
std::vector<unsigned char> encode_wav(const AudioClip& clip, WavEncoding encoding);

// Band-limited rational resampler (Kaiser-windowed sinc, polyphase). The
// output has floor(n * target / source) samples. The anti-aliasing cutoff is
// 0.95 of the lower of the two Nyquist frequencies.
AudioClip resample(const AudioClip& clip, double target_rate);

}  // namespace lark
