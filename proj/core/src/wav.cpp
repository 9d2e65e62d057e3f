#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "lark/audio.hpp"
#include "lark/errors.hpp"

namespace lark {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const unsigned char> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const unsigned char> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool tag_is(std::span<const unsigned char> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  std::uint16_t block_align = 0;
};

}  // namespace

AudioClip::AudioClip(std::vector<double> samples, double sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
    throw Error(ErrorKind::kArgument, "sample rate must be positive");
  }
  for (double s : samples_) {
    if (!std::isfinite(s)) throw Error(ErrorKind::kArgument, "audio sample is not finite");
  }
}

AudioClip decode_wav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw Error(ErrorKind::kFormat, "missing RIFF/WAVE header");
  }

  FmtChunk fmt;
  bool have_fmt = false;
  std::span<const unsigned char> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      // Some writers leave the data size unset when streaming; accept a
      // truncated data chunk, reject anything else.
      if (!tag_is(bytes, pos, "data")) throw Error(ErrorKind::kFormat, "chunk overruns file");
    }
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (tag_is(bytes, pos, "fmt ")) {
      if (avail < 16) throw Error(ErrorKind::kFormat, "fmt chunk too short");
      fmt.format = read_u16(bytes, body);
      fmt.channels = read_u16(bytes, body + 2);
      fmt.sample_rate = read_u32(bytes, body + 4);
      fmt.block_align = read_u16(bytes, body + 12);
      fmt.bits = read_u16(bytes, body + 14);
      if (fmt.format == kFormatExtensible) {
        if (avail < 26) throw Error(ErrorKind::kFormat, "extensible fmt chunk too short");
        fmt.format = read_u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, avail);
      have_data = true;
    }
    pos = body + avail + (avail & 1u);
  }

  if (!have_fmt) throw Error(ErrorKind::kFormat, "missing fmt chunk");
  if (!have_data) throw Error(ErrorKind::kFormat, "missing data chunk");
  if (fmt.channels == 0) throw Error(ErrorKind::kFormat, "zero channels");
  if (fmt.sample_rate == 0) throw Error(ErrorKind::kFormat, "zero sample rate");

  const bool pcm16 = fmt.format == kFormatPcm && fmt.bits == 16;
  const bool f32 = fmt.format == kFormatFloat && fmt.bits == 32;
  if (!pcm16 && !f32) {
    throw Error(ErrorKind::kUnsupportedCodec,
                "format tag " + std::to_string(fmt.format) + " with " + std::to_string(fmt.bits) +
                    " bits per sample");
  }

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t frames = data.size() / frame_bytes;
  std::vector<double> mono(frames, 0.0);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < fmt.channels; ++ch) {
      const std::size_t at = i * frame_bytes + ch * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(data, at)) / 32768.0;
      } else {
        acc += static_cast<double>(std::bit_cast<float>(read_u32(data, at)));
      }
    }
    mono[i] = acc / fmt.channels;
  }
  return AudioClip(std::move(mono), static_cast<double>(fmt.sample_rate));
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const Error& e) {
    throw e.prefixed(path.string());
  }
}

std::vector<unsigned char> encode_wav(const AudioClip& clip, WavEncoding encoding) {
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(clip.sample_rate()));
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.size() * (bits / 8));

  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : clip.samples()) {
    if (pcm16) {
      const double q = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
      const auto v = static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
      put_u16(out, static_cast<std::uint16_t>(v));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
    }
  }
  return out;
}

void save_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding) {
  const auto bytes = encode_wav(clip, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace lark
