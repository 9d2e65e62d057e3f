#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "lark/audio.hpp"
#include "lark/errors.hpp"
#include "lark/features.hpp"
#include "test_support.hpp"

using namespace lark;

namespace {

void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xff));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<unsigned char>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

// Minimal RIFF writer; `data` already holds interleaved little-endian samples.
std::vector<unsigned char> make_wav(std::uint16_t format, std::uint16_t channels,
                                    std::uint32_t rate, std::uint16_t bits,
                                    const std::vector<unsigned char>& data) {
  std::vector<unsigned char> b;
  put_tag(b, "RIFF");
  put_u32(b, static_cast<std::uint32_t>(36 + data.size()));
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put_u32(b, 16);
  put_u16(b, format);
  put_u16(b, channels);
  put_u32(b, rate);
  put_u32(b, rate * channels * bits / 8);
  put_u16(b, static_cast<std::uint16_t>(channels * bits / 8));
  put_u16(b, bits);
  put_tag(b, "data");
  put_u32(b, static_cast<std::uint32_t>(data.size()));
  b.insert(b.end(), data.begin(), data.end());
  return b;
}

std::vector<unsigned char> pcm16(const std::vector<std::int16_t>& samples) {
  std::vector<unsigned char> b;
  for (auto s : samples) put_u16(b, static_cast<std::uint16_t>(s));
  return b;
}

// Index of the strongest bin of a Hann-windowed spectrum.
int peak_bin(std::span<const double> x, int fft_size) {
  const auto w = hann_window(static_cast<int>(x.size()));
  std::vector<double> frame(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) frame[i] = x[i] * w[i];
  const PowerSpectrum ps(fft_size);
  Eigen::Index k = 0;
  ps.compute(frame).maxCoeff(&k);
  return static_cast<int>(k);
}

}  // namespace

TEST_SUITE("audio") {
  TEST_CASE("one second of 16-bit silence decodes to 44100 zeros") {
    const auto bytes = make_wav(1, 1, 44100, 16, pcm16(std::vector<std::int16_t>(44100, 0)));
    const AudioClip clip = decode_wav(bytes);
    CHECK(clip.size() == 44100);
    CHECK(clip.sample_rate() == 44100.0);
    for (double s : clip.samples()) REQUIRE(s == 0.0);
  }

  TEST_CASE("stereo channels of opposite sign average to silence") {
    std::vector<std::int16_t> interleaved;
    for (int i = 0; i < 1000; ++i) {
      interleaved.push_back(16384);
      interleaved.push_back(-16384);
    }
    const AudioClip clip = decode_wav(make_wav(1, 2, 44100, 16, pcm16(interleaved)));
    CHECK(clip.size() == 1000);
    for (double s : clip.samples()) REQUIRE(s == 0.0);
  }

  TEST_CASE("16-bit extremes scale by 1/32768") {
    const std::vector<std::int16_t> raw{-32768, 32767, 1, -1, 0};
    const AudioClip clip = decode_wav(make_wav(1, 1, 16000, 16, pcm16(raw)));
    REQUIRE(clip.size() == raw.size());
    CHECK(clip.samples()[0] == -1.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      CHECK(clip.samples()[i] == static_cast<double>(raw[i]) / 32768.0);
    }
  }

  TEST_CASE("32-bit float samples decode exactly") {
    const std::vector<float> raw{0.25f, -0.5f, 0.125f, 1.0f};
    std::vector<unsigned char> data(raw.size() * 4);
    std::memcpy(data.data(), raw.data(), data.size());
    const AudioClip clip = decode_wav(make_wav(3, 1, 22050, 32, data));
    REQUIRE(clip.size() == raw.size());
    CHECK(clip.sample_rate() == 22050.0);
    for (std::size_t i = 0; i < raw.size(); ++i) CHECK(clip.samples()[i] == raw[i]);
  }

  TEST_CASE("unsupported codecs and malformed files are rejected") {
    const auto alaw = make_wav(6, 1, 8000, 8, std::vector<unsigned char>(10, 0));
    try {
      decode_wav(alaw);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUnsupportedCodec);
    }
    const std::vector<unsigned char> junk{'R', 'I', 'F', 'X', 0, 0};
    try {
      decode_wav(junk);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kFormat);
    }
  }

  TEST_CASE("invalid clips are rejected") {
    CHECK_THROWS_AS(AudioClip({0.0}, 0.0), Error);
    CHECK_THROWS_AS(AudioClip({std::nan("")}, 44100.0), Error);
  }

  TEST_CASE("encode/decode round trip") {
    std::vector<double> samples;
    for (int i = 0; i < 500; ++i) samples.push_back(std::sin(0.01 * i) * 0.9);
    const AudioClip clip(samples, 44100.0);
    const AudioClip f = decode_wav(encode_wav(clip, WavEncoding::kFloat32));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      CHECK(f.samples()[i] == static_cast<double>(static_cast<float>(samples[i])));
    }
    const AudioClip q = decode_wav(encode_wav(clip, WavEncoding::kPcm16));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      CHECK(std::abs(q.samples()[i] - samples[i]) <= 0.5 / 32768.0 + 1e-15);
    }
    const auto dir = testing::scratch_dir("wav");
    save_wav(dir / "a.wav", clip);
    CHECK(load_wav(dir / "a.wav").size() == clip.size());
    CHECK_THROWS_AS(load_wav(dir / "missing.wav"), Error);
  }

  TEST_CASE("resampling to the same rate is the identity") {
    Rng rng(3);
    std::vector<double> s(1000);
    for (auto& v : s) v = rng.uniform(-1.0, 1.0);
    const AudioClip clip(s, 44100.0);
    const AudioClip out = resample(clip, 44100.0);
    REQUIRE(out.size() == clip.size());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(out.samples()[i] == s[i]);
  }

  TEST_CASE("48 kHz to 44.1 kHz keeps length ratio and tone frequency") {
    std::vector<double> s(48000);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * static_cast<double>(i) / 48000.0);
    }
    const AudioClip out = resample(AudioClip(s, 48000.0), 44100.0);
    CHECK(out.size() == 44100);
    CHECK(out.sample_rate() == 44100.0);

    const int n_fft = 65536;
    const int k = peak_bin(out.samples(), n_fft);
    const double bin_hz = 44100.0 / n_fft;
    CHECK(std::abs(k * bin_hz - 440.0) <= bin_hz);

    // Amplitude is preserved away from the edges.
    double peak = 0.0;
    for (std::size_t i = 2000; i < out.size() - 2000; ++i) peak = std::max(peak, std::abs(out.samples()[i]));
    CHECK(peak == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("upsampling preserves a tone too") {
    std::vector<double> s(16000);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = std::sin(2.0 * std::numbers::pi * 1000.0 * static_cast<double>(i) / 16000.0);
    }
    const AudioClip out = resample(AudioClip(s, 16000.0), 44100.0);
    CHECK(out.size() == 44100);
    const int n_fft = 65536;
    const double bin_hz = 44100.0 / n_fft;
    CHECK(std::abs(peak_bin(out.samples(), n_fft) * bin_hz - 1000.0) <= bin_hz);
  }
}
