#include "lark/render.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "lark/errors.hpp"
#include "lark/parallel.hpp"

namespace lark {
namespace {

constexpr int kMinCanvas = 64;
constexpr int kSubpixelBits = 4;
constexpr double kSubpixelScale = 1 << kSubpixelBits;
constexpr double kDashPx = 8.0;
constexpr double kGapPx = 5.0;

std::vector<int> range(int first, int last) {
  std::vector<int> v;
  for (int i = first; i <= last; ++i) v.push_back(i);
  return v;
}

cv::Point to_fixed(const cv::Point2d& p) {
  return {static_cast<int>(std::lround(p.x * kSubpixelScale)),
          static_cast<int>(std::lround(p.y * kSubpixelScale))};
}

void stroke(cv::Mat& img, const cv::Point2d& a, const cv::Point2d& b, const cv::Scalar& color, int thickness) {
  cv::line(img, to_fixed(a), to_fixed(b), color, thickness, cv::LINE_AA, kSubpixelBits);
}

}  // namespace

const std::vector<PolylineGroup>& face_topology() {
  static const std::vector<PolylineGroup> groups = {
      {"jaw", range(0, 16), false},         {"right_brow", range(17, 21), false},
      {"left_brow", range(22, 26), false},  {"nose_bridge", range(27, 30), false},
      {"nose_base", range(31, 35), false},  {"right_eye", range(36, 41), true},
      {"left_eye", range(42, 47), true},    {"outer_lip", range(48, 59), true},
      {"inner_lip", range(60, 67), true},
  };
  return groups;
}

void draw_frame(cv::Mat& image, const LandmarkFrame& frame, const StrokeStyle& style) {
  const double side = std::min(image.cols, image.rows);
  const double px_scale = side / 600.0;
  const int thickness = std::max(1, static_cast<int>(std::lround(style.width * px_scale)));
  const double dash = kDashPx * px_scale;
  const double gap = kGapPx * px_scale;

  for (const auto& g : face_topology()) {
    std::vector<cv::Point2d> pts;
    for (int i : g.indices) {
      const Point2 p = frame.point(i);
      pts.emplace_back(p.x() * image.cols, p.y() * image.rows);
    }
    if (g.closed) pts.push_back(pts.front());

    if (!style.dashed) {
      for (std::size_t k = 1; k < pts.size(); ++k) stroke(image, pts[k - 1], pts[k], style.color, thickness);
      continue;
    }
    // Dashes cut the solid stroke's coverage, so a dashed polyline never
    // inks a pixel its solid version would leave blank.
    cv::Mat solid = cv::Mat::zeros(image.size(), CV_8U);
    cv::Mat keep = cv::Mat::zeros(image.size(), CV_8U);
    for (std::size_t k = 1; k < pts.size(); ++k) stroke(solid, pts[k - 1], pts[k], cv::Scalar(255), thickness);
    const double half = 1.5 * thickness;
    // The on/off pattern runs continuously along the whole polyline.
    bool on = true;
    double remaining = dash;
    for (std::size_t k = 1; k < pts.size(); ++k) {
      const cv::Point2d d = pts[k] - pts[k - 1];
      const double len = std::hypot(d.x, d.y);
      if (len == 0.0) continue;
      const cv::Point2d n(-d.y / len * half, d.x / len * half);
      if (on) {
        // Joint inside a dash: keep the whole corner.
        cv::circle(keep, to_fixed(pts[k - 1]), static_cast<int>(std::lround(half * kSubpixelScale)), 255, cv::FILLED,
                   cv::LINE_8, kSubpixelBits);
      }
      double pos = 0.0;
      while (pos < len) {
        const double step = std::min(remaining, len - pos);
        if (on) {
          const cv::Point2d a = pts[k - 1] + d * (pos / len);
          const cv::Point2d b = pts[k - 1] + d * ((pos + step) / len);
          const cv::Point quad[4] = {to_fixed(a + n), to_fixed(b + n), to_fixed(b - n), to_fixed(a - n)};
          cv::fillConvexPoly(keep, quad, 4, 255, cv::LINE_8, kSubpixelBits);
        }
        pos += step;
        remaining -= step;
        if (remaining <= 1e-9) {
          on = !on;
          remaining = on ? dash : gap;
        }
      }
    }
    cv::Mat alpha;
    cv::bitwise_and(solid, keep, alpha);
    for (int y = 0; y < image.rows; ++y) {
      const auto* a = alpha.ptr<unsigned char>(y);
      auto* px = image.ptr<cv::Vec3b>(y);
      for (int x = 0; x < image.cols; ++x) {
        if (a[x] == 0) continue;
        const double w = a[x] / 255.0;
        for (int ch = 0; ch < 3; ++ch) {
          px[x][ch] = cv::saturate_cast<unsigned char>(px[x][ch] * (1.0 - w) + style.color[ch] * w);
        }
      }
    }
  }
}

cv::Mat render_frame(const LandmarkFrame& frame, const StrokeStyle& style, int canvas,
                     const cv::Scalar& background) {
  if (canvas < kMinCanvas) {
    throw Error(ErrorKind::kArgument, "canvas must be at least 64x64, got " + std::to_string(canvas));
  }
  cv::Mat img(canvas, canvas, CV_8UC3, background);
  draw_frame(img, frame, style);
  return img;
}

cv::Mat render_overlay(const LandmarkFrame& primary, const LandmarkFrame& overlay,
                       const RenderOptions& options) {
  cv::Mat img = render_frame(primary, options.primary, options.canvas, options.background);
  draw_frame(img, overlay, options.overlay);
  return img;
}

std::vector<unsigned char> encode_png(const cv::Mat& image) {
  std::vector<unsigned char> bytes;
  if (!cv::imencode(".png", image, bytes)) throw Error(ErrorKind::kIo, "png encoding failed");
  return bytes;
}

std::vector<std::filesystem::path> render_sequence(const LandmarkSequence& seq,
                                                   const std::filesystem::path& out_dir,
                                                   const RenderOptions& options,
                                                   const LandmarkSequence* overlay, int threads) {
  if (seq.empty()) throw Error(ErrorKind::kEmptyInput, "nothing to render");
  if (overlay && overlay->size() != seq.size()) {
    throw Error(ErrorKind::kShape, "overlay has " + std::to_string(overlay->size()) +
                                       " frames, sequence has " + std::to_string(seq.size()));
  }
  if (options.canvas < kMinCanvas) {
    throw Error(ErrorKind::kArgument, "canvas must be at least 64x64, got " + std::to_string(options.canvas));
  }
  std::filesystem::create_directories(out_dir);

  std::vector<std::filesystem::path> files(seq.size());
  std::vector<std::string> errors(seq.size());
  parallel_for(seq.size(), threads, [&](std::size_t k) {
    try {
      const cv::Mat img = overlay ? render_overlay(seq.frames[k], overlay->frames[k], options)
                                  : render_frame(seq.frames[k], options.primary, options.canvas, options.background);
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%05zu.png", k);
      files[k] = out_dir / name;
      const auto bytes = encode_png(img);
      std::ofstream out(files[k], std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!out) errors[k] = "cannot write " + files[k].string();
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(ErrorKind::kIo, e);
  }

  std::string index;
  char line[64];
  for (std::size_t k = 0; k < seq.size(); ++k) {
    std::snprintf(line, sizeof(line), "%zu\t%.6f\n", k, static_cast<double>(k) / seq.frame_rate);
    index += line;
  }
  std::ofstream out(out_dir / "index.tsv", std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + (out_dir / "index.tsv").string());
  out << index;
  return files;
}

}  // namespace lark
