#include <map>
#include <string>

#include "doctest.h"
#include "lark/archive.hpp"
#include "lark/dataset.hpp"
#include "lark/errors.hpp"
#include "lark/landmark_io.hpp"
#include "lark/synthetic.hpp"
#include "test_support.hpp"

using namespace lark;

namespace {

DatasetManifest with_split(DatasetManifest m, Split split) {
  for (auto& e : m.entries) e.split = split;
  return m;
}

std::vector<unsigned char> dataset_bytes(const Dataset& ds) {
  std::vector<unsigned char> all;
  for (const auto& u : ds.utterances) {
    Archive a;
    a.tensors.push_back(NamedTensor::from_matrix("f", u.features.frames));
    Eigen::MatrixXd t(static_cast<Eigen::Index>(u.targets.size()), kLandmarkDim);
    for (std::size_t k = 0; k < u.targets.size(); ++k) t.row(static_cast<Eigen::Index>(k)) = u.targets.frames[k].flat().transpose();
    a.tensors.push_back(NamedTensor::from_matrix("t", t));
    const auto bytes = encode_archive(a);
    all.insert(all.end(), bytes.begin(), bytes.end());
  }
  return all;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("manifest parsing") {
    const std::string text =
        "# comment\n"
        "a.wav\ta.txt\tspk1\ttrain\n"
        "\n"
        "/abs/b.wav\tb.txt\tspk2\tval\r\n"
        "c.wav\tc.txt\tspk2\tauto\n";
    const auto m = parse_manifest(text, "/base");
    REQUIRE(m.entries.size() == 3);
    CHECK(m.entries[0].audio_path == std::filesystem::path("/base/a.wav"));
    CHECK(m.entries[1].audio_path == std::filesystem::path("/abs/b.wav"));
    CHECK(m.entries[1].split == Split::kValidation);
    CHECK(m.entries[2].split == Split::kAuto);
    CHECK(parse_manifest(format_manifest(m)).entries.size() == 3);
    CHECK_THROWS_AS(parse_manifest("a.wav\ta.txt\tspk\n"), Error);
    CHECK_THROWS_AS(parse_manifest("a.wav\ta.txt\tspk\tholdout\n"), Error);
  }

  TEST_CASE("automatic split is seeded, stratified and about 10%") {
    DatasetManifest m;
    for (int s = 0; s < 4; ++s) {
      for (int u = 0; u < 10; ++u) {
        m.entries.push_back({"x.wav", "x.txt", "spk" + std::to_string(s), Split::kAuto});
      }
    }
    m.entries.push_back({"y.wav", "y.txt", "fixed", Split::kTest});
    const auto a = assign_splits(m, 5);
    CHECK(a == assign_splits(m, 5));
    CHECK(a.back() == Split::kTest);
    std::map<std::string, int> val_per_speaker;
    int n_val = 0;
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
      CHECK(a[i] != Split::kAuto);
      if (a[i] == Split::kValidation) {
        ++n_val;
        ++val_per_speaker[m.entries[i].speaker];
      }
    }
    CHECK(n_val == 4);
    CHECK(val_per_speaker.size() == 4);

    DatasetManifest singles;
    for (int s = 0; s < 3; ++s) singles.entries.push_back({"x", "y", "s" + std::to_string(s), Split::kAuto});
    const auto b = assign_splits(singles, 1);
    CHECK(std::count(b.begin(), b.end(), Split::kValidation) == 1);
  }

  TEST_CASE("empty manifest is an empty-input error") {
    try {
      build_dataset(DatasetManifest{}, BuildOptions{});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kEmptyInput);
      CHECK(std::string(e.what()).find("empty manifest") != std::string::npos);
    }
  }

  TEST_CASE("two-entry mean face equals the direct average of aligned tracks") {
    const auto dir = testing::scratch_dir("dataset_mean");
    const auto manifest =
        with_split(generate_synthetic_dataset(dir, {.seed = 3, .n_utterances = 2, .n_speakers = 2}), Split::kTrain);
    const Dataset ds = build_dataset(manifest, BuildOptions{});
    REQUIRE(ds.utterances.size() == 2);
    CHECK(ds.rejected.empty());

    Eigen::Matrix<double, kNumLandmarks, 2> sum = Eigen::Matrix<double, kNumLandmarks, 2>::Zero();
    std::size_t count = 0;
    for (const auto& e : manifest.entries) {
      const LandmarkFile file = read_landmark_file(e.landmark_path);
      LandmarkSequence scaled;
      for (const auto& f : file.pixels.frames) scaled.frames.push_back(LandmarkFrame(f.points() / 600.0));
      for (const auto& f : align_sequence(scaled).frames) {
        sum += f.points();
        ++count;
      }
    }
    CHECK(count == 150);
    CHECK(ds.mean_face.source_count == 150);
    CHECK((ds.mean_face.shape.points() - sum / static_cast<double>(count)).cwiseAbs().maxCoeff() < 1e-12);

    // A 3 s utterance is one 75-frame training pair.
    for (const auto& u : ds.utterances) {
      CHECK(u.features.num_frames() == 75);
      CHECK(u.targets.size() == 75);
      CHECK(testing::max_abs_diff(u.targets.frames[0], ds.mean_face.shape) < 1e-9);
    }
    const auto chunks = split_into_chunks(ds.utterances);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].length == 75);
  }

  TEST_CASE("bad entries are rejected with diagnostics") {
    const auto dir = testing::scratch_dir("dataset_reject");
    auto manifest = with_split(
        generate_synthetic_dataset(dir, {.seed = 4, .n_utterances = 4, .n_speakers = 2}), Split::kTrain);

    // Entry 1 loses three landmark frames, entry 2 two, entry 3 points nowhere.
    for (int idx : {1, 2}) {
      LandmarkFile f = read_landmark_file(manifest.entries[idx].landmark_path);
      f.pixels.frames.resize(f.pixels.frames.size() - static_cast<std::size_t>(idx == 1 ? 3 : 2));
      write_landmark_file(manifest.entries[idx].landmark_path, f);
    }
    manifest.entries[3].audio_path = dir / "nope.wav";

    const Dataset ds = build_dataset(manifest, BuildOptions{.threads = 2});
    REQUIRE(ds.rejected.size() == 2);
    CHECK(ds.rejected[0].manifest_index == 1);
    CHECK(ds.rejected[0].message.find("frame count mismatch") != std::string::npos);
    CHECK(ds.rejected[1].manifest_index == 3);
    CHECK(ds.rejected[1].message.find("nope.wav") != std::string::npos);
    REQUIRE(ds.utterances.size() == 2);
    CHECK(ds.utterances[1].manifest_index == 2);
    CHECK(ds.utterances[1].features.num_frames() == 73);
    CHECK(ds.utterances[1].targets.size() == 73);

    DatasetManifest all_bad;
    all_bad.entries = {manifest.entries[1], manifest.entries[3]};
    CHECK_THROWS_AS(build_dataset(all_bad, BuildOptions{}), Error);
  }

  TEST_CASE("building twice gives identical tensors; save/load round trips") {
    const auto dir = testing::scratch_dir("dataset_idem");
    const auto manifest = generate_synthetic_dataset(dir, {.seed = 5, .n_utterances = 5, .n_speakers = 2});
    const Dataset a = build_dataset(manifest, BuildOptions{.seed = 9, .threads = 1});
    const Dataset b = build_dataset(manifest, BuildOptions{.seed = 9, .threads = 3});
    CHECK(dataset_bytes(a) == dataset_bytes(b));
    int n_val = 0;
    for (const auto& u : a.utterances) n_val += u.split == Split::kValidation ? 1 : 0;
    CHECK(n_val == 1);

    save_dataset(dir / "out", a);
    const Dataset c = load_dataset(dir / "out");
    CHECK(dataset_bytes(c) == dataset_bytes(a));
    CHECK(c.mean_face.source_count == a.mean_face.source_count);
    CHECK(testing::max_abs_diff(c.mean_face.shape, a.mean_face.shape) < 1e-12);
    for (std::size_t i = 0; i < a.utterances.size(); ++i) CHECK(c.utterances[i].split == a.utterances[i].split);

    // A supplied mean face replaces the computed one.
    MeanFace fixed{template_face(), 1};
    const Dataset d = build_dataset(manifest, BuildOptions{.mean_face = fixed});
    CHECK(testing::max_abs_diff(d.utterances[0].targets.frames[0], fixed.shape) < 1e-9);
  }

  TEST_CASE("long utterances split into 75-frame chunks") {
    std::vector<Utterance> us(2);
    us[0].features.frames = Eigen::MatrixXd::Zero(160, 128);
    us[1].features.frames = Eigen::MatrixXd::Zero(75, 128);
    us[1].split = Split::kValidation;
    const auto train = split_into_chunks(us);
    REQUIRE(train.size() == 3);
    CHECK(train[1].start == 75);
    CHECK(train[2].start == 150);
    CHECK(train[2].length == 10);
    CHECK(split_into_chunks(us, Split::kValidation).size() == 1);
  }
}
