#include <string>

#include "doctest.h"
#include "lark/errors.hpp"
#include "lark/landmark_io.hpp"
#include "test_support.hpp"

using namespace lark;

namespace {

std::string frame_line(int index, double base) {
  std::string line = std::to_string(index);
  for (int i = 0; i < kLandmarkDim; ++i) line += "," + format_double(base + i);
  return line + "\n";
}

}  // namespace

TEST_SUITE("landmark_io") {
  TEST_CASE("parses header and frames") {
    const std::string text = "# 720,576,25\n" + frame_line(0, 1.0) + frame_line(1, 2.5);
    const LandmarkFile file = parse_landmark_text(text);
    CHECK(file.width == 720.0);
    CHECK(file.height == 576.0);
    CHECK(file.pixels.frame_rate == 25.0);
    CHECK_FALSE(file.is_mean_face);
    REQUIRE(file.pixels.size() == 2);
    CHECK(file.pixels.frames[0].point(0).x() == 1.0);
    CHECK(file.pixels.frames[0].point(0).y() == 2.0);
    CHECK(file.pixels.frames[1].point(67).y() == 2.5 + 135);
  }

  TEST_CASE("malformed input is a format error naming the line") {
    const auto expect_format = [](const std::string& text) {
      try {
        parse_landmark_text(text);
        FAIL("expected an error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kFormat);
      }
    };
    expect_format(frame_line(0, 1.0));                       // no header
    expect_format("# 720,576\n" + frame_line(0, 1.0));       // header too short
    expect_format("# 720,576,25\n0,1,2,3\n");                // too few values
    expect_format("# 720,576,25\n" + frame_line(0, 1.0).replace(2, 1, "x"));
    expect_format("# 720,576,0\n" + frame_line(0, 1.0));     // bad fps
    try {
      parse_landmark_text("# 720,576,25\n" + frame_line(0, 1.0) + "0,1\n");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  TEST_CASE("write/read round trip is exact") {
    Rng rng(1);
    LandmarkFile file;
    file.width = 640;
    file.height = 480;
    file.pixels.frame_rate = 29.97;
    for (int t = 0; t < 3; ++t) file.pixels.frames.push_back(testing::random_frame(rng, 0.0, 640.0));
    const auto dir = testing::scratch_dir("landmark_io");
    write_landmark_file(dir / "a.txt", file);
    const LandmarkFile back = read_landmark_file(dir / "a.txt");
    CHECK(back.width == 640.0);
    CHECK(back.pixels.frame_rate == 29.97);
    REQUIRE(back.pixels.size() == 3);
    for (int t = 0; t < 3; ++t) CHECK(testing::max_abs_diff(back.pixels.frames[t], file.pixels.frames[t]) == 0.0);
    CHECK_THROWS_AS(read_landmark_file(dir / "missing.txt"), Error);
  }

  TEST_CASE("canonical sequences and mean faces use the 600 px frame") {
    Rng rng(2);
    LandmarkSequence seq;
    for (int t = 0; t < 2; ++t) seq.frames.push_back(testing::random_frame(rng));
    const auto dir = testing::scratch_dir("canonical");
    write_canonical_sequence(dir / "s.txt", seq);
    const LandmarkFile raw = read_landmark_file(dir / "s.txt");
    CHECK(raw.width == 600.0);
    CHECK(raw.pixels.frames[0].point(5).x() == doctest::Approx(600.0 * seq.frames[0].point(5).x()));
    const auto back = read_canonical_sequence(dir / "s.txt");
    CHECK(testing::max_abs_diff(back.frames[1], seq.frames[1]) < 1e-14);

    const MeanFace mean{seq.frames[0], 42};
    write_mean_face(dir / "mean.txt", mean);
    CHECK(testing::read_text(dir / "mean.txt").rfind("# 600,600,25,mean_face,42\n", 0) == 0);
    const MeanFace m = read_mean_face(dir / "mean.txt");
    CHECK(m.source_count == 42);
    CHECK(testing::max_abs_diff(m.shape, mean.shape) < 1e-14);
    CHECK_THROWS_AS(read_mean_face(dir / "s.txt"), Error);
  }

  TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -123456.789, 0.0}) {
      CHECK(std::stod(format_double(v)) == v);
    }
  }
}
