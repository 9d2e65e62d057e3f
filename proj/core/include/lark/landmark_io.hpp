#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "lark/landmarks.hpp"

namespace lark {

// Text landmark files: a mandatory header `# width,height,fps` followed by one
// line per frame, `frame_index,x0,y0,...,x67,y67`, in source pixel
// coordinates. Mean-face files append `,mean_face,<source_count>` to the
// header and hold a single frame in the canonical 600 x 600 frame.
struct LandmarkFile {
  LandmarkSequence pixels;
  double width = 0.0;
  double height = 0.0;
  bool is_mean_face = false;
  std::size_t source_count = 0;
};

LandmarkFile parse_landmark_text(std::string_view text);
LandmarkFile read_landmark_file(const std::filesystem::path& path);

std::string format_landmark_text(const LandmarkFile& file);
void write_landmark_file(const std::filesystem::path& path, const LandmarkFile& file);

// Writes/reads a normalized sequence in the canonical 600 x 600 pixel frame.
void write_canonical_sequence(const std::filesystem::path& path, const LandmarkSequence& normalized);
LandmarkSequence read_canonical_sequence(const std::filesystem::path& path);

void write_mean_face(const std::filesystem::path& path, const MeanFace& normalized);
MeanFace read_mean_face(const std::filesystem::path& path);

// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace lark
