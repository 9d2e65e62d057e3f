#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "lark/landmark_io.hpp"
#include "lark/synthetic.hpp"
#include "test_support.hpp"

using namespace lark;

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Per-frame energy level, clipped at full scale and smoothed [1/4, 1/2, 1/4].
std::vector<double> energy_oracle(std::span<const double> s) {
  std::vector<double> level;
  for (std::size_t start = 0; start + 1764 <= s.size(); start += 1764) {
    double acc = 0.0;
    for (std::size_t i = start; i < start + 1764; ++i) acc += s[i] * s[i];
    level.push_back(std::min(1.0, std::sqrt(acc / 1764.0) / 0.3));
  }
  std::vector<double> out(level.size());
  for (std::size_t t = 0; t < level.size(); ++t) {
    const double prev = level[t == 0 ? 0 : t - 1];
    const double next = level[t + 1 < level.size() ? t + 1 : t];
    out[t] = 0.25 * prev + 0.5 * level[t] + 0.25 * next;
  }
  return out;
}

std::vector<std::filesystem::path> files_under(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(std::filesystem::relative(e.path(), dir));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("synthetic") {
  TEST_CASE("template face has its eye corners on the pins") {
    const LandmarkFrame f = template_face();
    CHECK((f.point(kRightEyeOuter) - canonical_pin_left()).norm() < 1e-15);
    CHECK((f.point(kLeftEyeOuter) - canonical_pin_right()).norm() < 1e-15);
    CHECK(f.all_finite());
    CHECK(f.points().minCoeff() > 0.0);
    CHECK(f.points().maxCoeff() < 1.0);
  }

  TEST_CASE("mouth opening follows frame energy") {
    Rng rng(1);
    const SpeakerStyle spk = make_speaker("s", rng);
    for (int trial = 0; trial < 5; ++trial) {
      const auto u = synthesize_utterance(random_segments(3.0, rng), spk, rng);
      REQUIRE(u.audio.size() == 132300);
      REQUIRE(u.landmarks.pixels.size() == 75);
      const auto oracle = energy_oracle(u.audio.samples());
      REQUIRE(oracle.size() == 75);

      // Lip gap measured from the written pixel landmarks.
      const SimilarityTransform back = spk.placement.inverse();
      std::vector<double> gap;
      for (const auto& f : u.landmarks.pixels.frames) {
        const LandmarkFrame n = apply_transform(back, f);
        gap.push_back(n.point(66).y() - n.point(62).y());
      }
      const double r = pearson(gap, oracle);
      CAPTURE(r);
      CHECK(r > 0.9);
      for (std::size_t t = 0; t < 75; ++t) CHECK(std::abs(u.opening[t] - 0.06 * oracle[t]) < 1e-12);
    }
  }

  TEST_CASE("silence gives a constant closed-mouth track") {
    Rng rng(2);
    const SpeakerStyle spk = make_speaker("s", rng);
    const std::vector<Segment> silence{{Segment::Kind::kSilence, 2.0, 0.0, 0.0}};
    const auto u = synthesize_utterance(silence, spk, rng);
    REQUIRE(u.landmarks.pixels.size() == 50);
    const LandmarkFrame closed = apply_transform(spk.placement, face_with_opening(spk, 0.0));
    for (const auto& f : u.landmarks.pixels.frames) CHECK(testing::max_abs_diff(f, closed) == 0.0);
    for (double o : u.opening) CHECK(o == 0.0);
  }

  TEST_CASE("same seed gives byte-identical trees") {
    const auto a = testing::scratch_dir("synth_a");
    const auto b = testing::scratch_dir("synth_b");
    const auto c = testing::scratch_dir("synth_c");
    const SyntheticOptions opts{.seed = 7, .n_utterances = 3, .n_speakers = 2, .seconds = 1.0};
    const auto manifest = generate_synthetic_dataset(a, opts);
    generate_synthetic_dataset(b, opts);
    generate_synthetic_dataset(c, {.seed = 8, .n_utterances = 3, .n_speakers = 2, .seconds = 1.0});
    REQUIRE(manifest.entries.size() == 3);
    CHECK(manifest.entries[2].speaker == "spk0");
    CHECK(manifest.entries[1].split == Split::kAuto);

    const auto files = files_under(a);
    CHECK(files.size() == 7);
    CHECK(files == files_under(b));
    bool any_diff = false;
    for (const auto& f : files) {
      CHECK(testing::read_bytes(a / f) == testing::read_bytes(b / f));
      any_diff = any_diff || testing::read_bytes(a / f) != testing::read_bytes(c / f);
    }
    CHECK(any_diff);
    const auto text = testing::read_text(a / "manifest.tsv");
    CHECK(text.rfind("audio/utt_0000.wav\tlandmarks/utt_0000.txt\tspk0\tauto\n", 0) == 0);
    CHECK(read_landmark_file(a / "landmarks/utt_0001.txt").width == 720.0);
  }
}
