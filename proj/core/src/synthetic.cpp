#include "lark/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "lark/errors.hpp"
#include "lark/features.hpp"

namespace lark {
namespace {

constexpr double kFullEnergyRms = 0.3;
constexpr double kFadeSeconds = 0.005;

void set_px(Eigen::Matrix<double, kNumLandmarks, 2>& p, int i, double x, double y) {
  p(i, 0) = x / kCanonicalSide;
  p(i, 1) = y / kCanonicalSide;
}

}  // namespace

LandmarkFrame template_face() {
  Eigen::Matrix<double, kNumLandmarks, 2> p;
  // Jaw, ear to ear through the chin.
  for (int i = 0; i <= 16; ++i) {
    const double a = std::numbers::pi * i / 16.0;
    set_px(p, i, 300.0 - 165.0 * std::cos(a), 230.0 + 290.0 * std::sin(a));
  }
  for (int k = 0; k < 5; ++k) {
    const double arch = 20.0 * std::sin(std::numbers::pi * k / 4.0);
    set_px(p, 17 + k, 165.0 + 26.25 * k, 165.0 - arch);
    set_px(p, 22 + k, 330.0 + 26.25 * k, 165.0 - arch);
  }
  for (int k = 0; k < 4; ++k) set_px(p, 27 + k, 300.0, 210.0 + 27.0 * k);
  const double nose_x[5] = {268, 284, 300, 316, 332};
  const double nose_y[5] = {318, 323, 326, 323, 318};
  for (int k = 0; k < 5; ++k) set_px(p, 31 + k, nose_x[k], nose_y[k]);

  set_px(p, 36, kPinLeftX, kPinY);
  set_px(p, 37, 205, 188);
  set_px(p, 38, 230, 188);
  set_px(p, 39, 255, 200);
  set_px(p, 40, 230, 210);
  set_px(p, 41, 205, 210);
  set_px(p, 42, 345, 200);
  set_px(p, 43, 370, 188);
  set_px(p, 44, 395, 188);
  set_px(p, 45, kPinRightX, kPinY);
  set_px(p, 46, 395, 210);
  set_px(p, 47, 370, 210);

  const double outer[12][2] = {{245, 400}, {265, 388}, {285, 382}, {300, 385}, {315, 382}, {335, 388},
                               {355, 400}, {335, 415}, {315, 422}, {300, 424}, {285, 422}, {265, 415}};
  for (int k = 0; k < 12; ++k) set_px(p, 48 + k, outer[k][0], outer[k][1]);
  const double inner[8][2] = {{255, 400}, {280, 398}, {300, 398}, {320, 398},
                              {345, 400}, {320, 402}, {300, 402}, {280, 402}};
  for (int k = 0; k < 8; ++k) set_px(p, 60 + k, inner[k][0], inner[k][1]);
  return LandmarkFrame(p);
}

SpeakerStyle make_speaker(const std::string& id, Rng& rng) {
  SpeakerStyle s;
  s.id = id;
  const double jaw_width = rng.uniform(-0.04, 0.04);
  const double mouth_drop = rng.uniform(-0.02, 0.02);
  const double eye_gap = rng.uniform(-0.01, 0.01);
  for (int i = 0; i < kNumLandmarks; ++i) {
    s.shape_offset(i, 0) = rng.uniform(-0.006, 0.006);
    s.shape_offset(i, 1) = rng.uniform(-0.006, 0.006);
    if (i <= 16) s.shape_offset(i, 0) += jaw_width * (i < 8 ? -1.0 : i > 8 ? 1.0 : 0.0);
    if (i >= 48) s.shape_offset(i, 1) += mouth_drop;
    if (i >= 36 && i <= 41) s.shape_offset(i, 0) -= eye_gap;
    if (i >= 42 && i <= 47) s.shape_offset(i, 0) += eye_gap;
  }
  s.placement.scale = rng.uniform(0.55, 0.8) * kCanonicalSide;
  s.placement.rotation = rng.uniform(-0.08, 0.08);
  s.placement.translation = Point2(rng.uniform(120.0, 240.0), rng.uniform(40.0, 110.0));
  return s;
}

std::vector<double> frame_rms(const AudioClip& clip) {
  const auto window = static_cast<std::size_t>(std::lround(clip.sample_rate() / kFrameRate));
  const std::size_t n = clip.size() / window;
  std::vector<double> out(n);
  const auto s = clip.samples();
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < window; ++i) acc += s[t * window + i] * s[t * window + i];
    out[t] = std::sqrt(acc / static_cast<double>(window));
  }
  return out;
}

std::vector<double> mouth_opening(const AudioClip& clip) {
  const std::vector<double> rms = frame_rms(clip);
  std::vector<double> level(rms.size());
  for (std::size_t t = 0; t < rms.size(); ++t) level[t] = std::min(1.0, rms[t] / kFullEnergyRms);
  std::vector<double> out(level.size());
  for (std::size_t t = 0; t < level.size(); ++t) {
    const double prev = level[t == 0 ? 0 : t - 1];
    const double next = level[std::min(t + 1, level.size() - 1)];
    out[t] = kMaxMouthOpening * (0.25 * prev + 0.5 * level[t] + 0.25 * next);
  }
  return out;
}

LandmarkFrame face_with_opening(const SpeakerStyle& speaker, double opening) {
  Eigen::Matrix<double, kNumLandmarks, 2> p = template_face().points() + speaker.shape_offset;
  for (int i = 5; i <= 11; ++i) p(i, 1) += 0.5 * opening;                      // chin
  for (int i : {55, 56, 57, 58, 59, 65, 66, 67}) p(i, 1) += opening;         // lower lip
  for (int i : {49, 50, 51, 52, 53, 61, 62, 63}) p(i, 1) -= 0.15 * opening;  // upper lip
  for (int i : {48, 54, 60, 64}) p(i, 1) += 0.4 * opening;                   // corners
  return LandmarkFrame(p);
}

std::vector<Segment> random_segments(double seconds, Rng& rng) {
  std::vector<Segment> segs;
  double total = 0.0;
  while (total < seconds) {
    Segment s;
    s.seconds = std::min(rng.uniform(0.2, 0.6), seconds - total);
    const double pick = rng.uniform();
    if (pick < 0.3) {
      s.kind = Segment::Kind::kSilence;
    } else if (pick < 0.7) {
      s.kind = Segment::Kind::kTone;
      s.frequency = std::exp(rng.uniform(std::log(120.0), std::log(4000.0)));
      s.amplitude = rng.uniform(0.1, 0.6);
    } else {
      s.kind = Segment::Kind::kNoise;
      s.amplitude = rng.uniform(0.05, 0.35);
    }
    segs.push_back(s);
    total += s.seconds;
  }
  return segs;
}

SyntheticUtterance synthesize_utterance(const std::vector<Segment>& segments,
                                        const SpeakerStyle& speaker, Rng& rng, double sample_rate) {
  std::vector<double> samples;
  const auto fade = static_cast<std::size_t>(kFadeSeconds * sample_rate);
  double elapsed = 0.0;
  for (const auto& seg : segments) {
    // Segment boundaries are rounded cumulatively so lengths add up exactly.
    const auto begin = static_cast<std::size_t>(std::llround(elapsed * sample_rate));
    elapsed += seg.seconds;
    const auto n = static_cast<std::size_t>(std::llround(elapsed * sample_rate)) - begin;
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      switch (seg.kind) {
        case Segment::Kind::kSilence:
          break;
        case Segment::Kind::kTone:
          v = seg.amplitude * std::sin(2.0 * std::numbers::pi * seg.frequency * static_cast<double>(i) / sample_rate);
          break;
        case Segment::Kind::kNoise:
          v = seg.amplitude * std::sqrt(3.0) * rng.uniform(-1.0, 1.0);
          break;
      }
      const std::size_t edge = std::min(i, n - 1 - i);
      if (edge < fade) v *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) / static_cast<double>(fade));
      samples.push_back(std::clamp(v, -1.0, 1.0));
    }
  }

  SyntheticUtterance u;
  u.audio = AudioClip(std::move(samples), sample_rate);
  // Quantize through 16-bit PCM so the written file and the landmark track
  // agree exactly.
  u.audio = decode_wav(encode_wav(u.audio, WavEncoding::kPcm16));
  u.opening = mouth_opening(u.audio);

  u.landmarks.width = kSourceWidth;
  u.landmarks.height = kSourceHeight;
  u.landmarks.pixels.frame_rate = kFrameRate;
  for (double o : u.opening) {
    u.landmarks.pixels.frames.push_back(apply_transform(speaker.placement, face_with_opening(speaker, o)));
  }
  return u;
}

DatasetManifest generate_synthetic_dataset(const std::filesystem::path& out_dir,
                                           const SyntheticOptions& options) {
  if (options.n_utterances < 1) throw Error(ErrorKind::kArgument, "need at least one utterance");
  if (options.n_speakers < 1) throw Error(ErrorKind::kArgument, "need at least one speaker");
  if (!(options.seconds >= 0.12)) throw Error(ErrorKind::kArgument, "utterances must last at least 0.12 s");
  std::filesystem::create_directories(out_dir / "audio");
  std::filesystem::create_directories(out_dir / "landmarks");

  Rng speaker_rng(options.seed);
  std::vector<SpeakerStyle> speakers;
  const int n_speakers = std::min(options.n_speakers, options.n_utterances);
  for (int s = 0; s < n_speakers; ++s) speakers.push_back(make_speaker("spk" + std::to_string(s), speaker_rng));

  DatasetManifest manifest;
  for (int i = 0; i < options.n_utterances; ++i) {
    Rng rng(options.seed * 1000003ULL + static_cast<std::uint64_t>(i) + 1);
    const SpeakerStyle& spk = speakers[static_cast<std::size_t>(i % n_speakers)];
    const SyntheticUtterance u = synthesize_utterance(random_segments(options.seconds, rng), spk, rng);

    char stem[32];
    std::snprintf(stem, sizeof(stem), "utt_%04d", i);
    const std::filesystem::path audio_rel = std::filesystem::path("audio") / (std::string(stem) + ".wav");
    const std::filesystem::path marks_rel = std::filesystem::path("landmarks") / (std::string(stem) + ".txt");
    save_wav(out_dir / audio_rel, u.audio);
    write_landmark_file(out_dir / marks_rel, u.landmarks);
    manifest.entries.push_back({audio_rel, marks_rel, spk.id, Split::kAuto});
  }
  std::ofstream out(out_dir / "manifest.tsv", std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write manifest in " + out_dir.string());
  out << format_manifest(manifest);
  for (auto& e : manifest.entries) {
    e.audio_path = out_dir / e.audio_path;
    e.landmark_path = out_dir / e.landmark_path;
  }
  return manifest;
}

}  // namespace lark
