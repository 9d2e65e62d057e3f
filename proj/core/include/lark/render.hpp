#pragma once

#include <filesystem>
#include <opencv2/core.hpp>
#include <string>
#include <vector>

#include "lark/landmarks.hpp"

namespace lark {

struct PolylineGroup {
  std::string name;
  std::vector<int> indices;
  bool closed = false;
};

// Jaw, brows, nose bridge/base, eyes and lips of the 68-point scheme. Every
// index in [0, 67] appears in exactly one group.
const std::vector<PolylineGroup>& face_topology();

struct StrokeStyle {
  cv::Scalar color{0, 0, 0};  // BGR
  double width = 2.0;         // pixels at a 600 px canvas, scaled with canvas size
  bool dashed = false;
};

struct RenderOptions {
  int canvas = 600;
  cv::Scalar background{255, 255, 255};
  StrokeStyle primary{{0, 0, 0}, 2.0, false};  // ground truth: black solid
  StrokeStyle overlay{{0, 0, 255}, 2.0, true};  // prediction: red dashed
};

// Strokes one frame (normalized coordinates) onto `image` (8-bit BGR).
void draw_frame(cv::Mat& image, const LandmarkFrame& frame, const StrokeStyle& style);

// Fresh canvas with one frame drawn. Throws kArgument for canvas < 64.
cv::Mat render_frame(const LandmarkFrame& frame, const StrokeStyle& style, int canvas,
                     const cv::Scalar& background = {255, 255, 255});

// Primary frame first, overlay frame on top.
cv::Mat render_overlay(const LandmarkFrame& primary, const LandmarkFrame& overlay,
                       const RenderOptions& options);

std::vector<unsigned char> encode_png(const cv::Mat& image);

// Writes frame_NNNNN.png per frame plus index.tsv (`frame_number<TAB>seconds`).
// `overlay`, when given, must have the same length.
std::vector<std::filesystem::path> render_sequence(const LandmarkSequence& seq,
                                                   const std::filesystem::path& out_dir,
                                                   const RenderOptions& options,
                                                   const LandmarkSequence* overlay = nullptr,
                                                   int threads = 1);

}  // namespace lark
