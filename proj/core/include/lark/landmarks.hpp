#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

namespace lark {

inline constexpr int kNumLandmarks = 68;
inline constexpr int kLandmarkDim = 2 * kNumLandmarks;
inline constexpr int kRightEyeOuter = 36;  // image-left outer eye corner
inline constexpr int kLeftEyeOuter = 45;   // image-right outer eye corner

// Canonical frame: a 600 x 600 pixel square with the outer eye corners pinned
// at (180, 200) and (420, 200). Normalized coordinates divide by the side.
inline constexpr double kCanonicalSide = 600.0;
inline constexpr double kPinLeftX = 180.0;
inline constexpr double kPinRightX = 420.0;
inline constexpr double kPinY = 200.0;

using Point2 = Eigen::Vector2d;

Point2 canonical_pin_left();   // normalized
Point2 canonical_pin_right();  // normalized

class LandmarkFrame {
 public:
  LandmarkFrame() : points_(Eigen::Matrix<double, kNumLandmarks, 2>::Zero()) {}
  explicit LandmarkFrame(const Eigen::Matrix<double, kNumLandmarks, 2>& points);

  // Interleaved x0, y0, x1, y1, ... (136 values).
  static LandmarkFrame from_flat(std::span<const double> xy);
  static LandmarkFrame from_flat(const Eigen::VectorXd& xy);
  Eigen::VectorXd flat() const;

  Point2 point(int i) const { return points_.row(i).transpose(); }
  void set_point(int i, const Point2& p) { points_.row(i) = p.transpose(); }
  const Eigen::Matrix<double, kNumLandmarks, 2>& points() const { return points_; }

  bool all_finite() const { return points_.allFinite(); }

 private:
  Eigen::Matrix<double, kNumLandmarks, 2> points_;
};

struct LandmarkSequence {
  std::vector<LandmarkFrame> frames;
  double frame_rate = 25.0;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
};

// p -> scale * R(rotation) * p + translation.
struct SimilarityTransform {
  double rotation = 0.0;
  double scale = 1.0;
  Point2 translation = Point2::Zero();

  static SimilarityTransform identity() { return {}; }

  Eigen::Matrix2d linear() const;
  Point2 apply(const Point2& p) const;
  SimilarityTransform inverse() const;
  // (a.compose(b))(p) == a(b(p))
  SimilarityTransform compose(const SimilarityTransform& inner) const;
};

struct MeanFace {
  LandmarkFrame shape;
  std::size_t source_count = 0;
};

// Maps the frame's outer eye corners (36, 45) exactly onto the two pins.
SimilarityTransform estimate_pinning_transform(const LandmarkFrame& frame, const Point2& pin_left,
                                               const Point2& pin_right);

// Least-squares similarity (no reflection) taking `from` onto `to` over all
// 68 points.
SimilarityTransform estimate_similarity_lsq(const LandmarkFrame& from, const LandmarkFrame& to);

LandmarkFrame apply_transform(const SimilarityTransform& t, const LandmarkFrame& frame);

// Pins frame 0 to the canonical (normalized) eye locations and applies that
// one transform to every frame.
LandmarkSequence align_sequence(const LandmarkSequence& seq);

// Pointwise mean over every frame of every sequence, in dataset order.
MeanFace compute_mean_face(std::span<const LandmarkSequence> dataset);

// output_t = mean + A (frame_t - frame_0), A the linear part of the
// least-squares similarity frame_0 -> mean.
LandmarkSequence remove_identity(const LandmarkSequence& aligned, const MeanFace& mean);

// Per-frame pinning onto the canonical (normalized) eye locations.
LandmarkFrame repin_eyes(const LandmarkFrame& frame);

LandmarkFrame normalize(const LandmarkFrame& pixels, double side = kCanonicalSide);
LandmarkFrame denormalize(const LandmarkFrame& normalized, double side = kCanonicalSide);
LandmarkSequence normalize(const LandmarkSequence& pixels, double side = kCanonicalSide);
LandmarkSequence denormalize(const LandmarkSequence& normalized, double side = kCanonicalSide);

// Linear interpolation of trajectories onto a new frame rate. Output frame k
// sits at k / target_fps seconds; frames past the last source sample are not
// emitted.
LandmarkSequence resample_frame_rate(const LandmarkSequence& seq, double target_fps);

}  // namespace lark
