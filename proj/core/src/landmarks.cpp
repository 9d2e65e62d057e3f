#include <cmath>
#include <complex>

#include "lark/errors.hpp"
#include "lark/landmarks.hpp"

namespace lark {
namespace {

using Complex = std::complex<double>;

Complex as_complex(const Point2& p) { return {p.x(), p.y()}; }

SimilarityTransform from_complex(Complex a, Complex b) {
  SimilarityTransform t;
  t.rotation = std::arg(a);
  t.scale = std::abs(a);
  t.translation = Point2(b.real(), b.imag());
  return t;
}

}  // namespace

Point2 canonical_pin_left() { return {kPinLeftX / kCanonicalSide, kPinY / kCanonicalSide}; }
Point2 canonical_pin_right() { return {kPinRightX / kCanonicalSide, kPinY / kCanonicalSide}; }

LandmarkFrame::LandmarkFrame(const Eigen::Matrix<double, kNumLandmarks, 2>& points)
    : points_(points) {}

LandmarkFrame LandmarkFrame::from_flat(std::span<const double> xy) {
  if (xy.size() != static_cast<std::size_t>(kLandmarkDim)) {
    throw Error(ErrorKind::kShape,
                "landmark frame needs 136 values, got " + std::to_string(xy.size()));
  }
  LandmarkFrame f;
  for (int i = 0; i < kNumLandmarks; ++i) {
    f.points_(i, 0) = xy[static_cast<std::size_t>(2 * i)];
    f.points_(i, 1) = xy[static_cast<std::size_t>(2 * i + 1)];
  }
  return f;
}

LandmarkFrame LandmarkFrame::from_flat(const Eigen::VectorXd& xy) {
  return from_flat(std::span<const double>(xy.data(), static_cast<std::size_t>(xy.size())));
}

Eigen::VectorXd LandmarkFrame::flat() const {
  Eigen::VectorXd v(kLandmarkDim);
  for (int i = 0; i < kNumLandmarks; ++i) {
    v[2 * i] = points_(i, 0);
    v[2 * i + 1] = points_(i, 1);
  }
  return v;
}

Eigen::Matrix2d SimilarityTransform::linear() const {
  const double c = std::cos(rotation) * scale;
  const double s = std::sin(rotation) * scale;
  Eigen::Matrix2d m;
  m << c, -s, s, c;
  return m;
}

Point2 SimilarityTransform::apply(const Point2& p) const { return linear() * p + translation; }

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.rotation = -rotation;
  inv.scale = 1.0 / scale;
  inv.translation = -(inv.linear() * translation);
  return inv;
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& inner) const {
  SimilarityTransform out;
  out.rotation = rotation + inner.rotation;
  out.scale = scale * inner.scale;
  out.translation = linear() * inner.translation + translation;
  return out;
}

SimilarityTransform estimate_pinning_transform(const LandmarkFrame& frame, const Point2& pin_left,
                                               const Point2& pin_right) {
  const Complex q_left = as_complex(frame.point(kRightEyeOuter));
  const Complex q_right = as_complex(frame.point(kLeftEyeOuter));
  const Complex span = q_right - q_left;
  if (std::norm(span) < 1e-24) {
    throw Error(ErrorKind::kDegenerateGeometry, "outer eye corners coincide");
  }
  const Complex p_left = as_complex(pin_left);
  const Complex p_right = as_complex(pin_right);
  const Complex a = (p_right - p_left) / span;
  const Complex b = p_left - a * q_left;
  return from_complex(a, b);
}

SimilarityTransform estimate_similarity_lsq(const LandmarkFrame& from, const LandmarkFrame& to) {
  Complex from_mean{0.0, 0.0};
  Complex to_mean{0.0, 0.0};
  for (int i = 0; i < kNumLandmarks; ++i) {
    from_mean += as_complex(from.point(i));
    to_mean += as_complex(to.point(i));
  }
  from_mean /= static_cast<double>(kNumLandmarks);
  to_mean /= static_cast<double>(kNumLandmarks);

  Complex cross{0.0, 0.0};
  double spread = 0.0;
  for (int i = 0; i < kNumLandmarks; ++i) {
    const Complex z = as_complex(from.point(i)) - from_mean;
    const Complex w = as_complex(to.point(i)) - to_mean;
    cross += std::conj(z) * w;
    spread += std::norm(z);
  }
  if (spread < 1e-24) throw Error(ErrorKind::kDegenerateGeometry, "all landmarks coincide");
  const Complex a = cross / spread;
  if (std::abs(a) < 1e-300) {
    throw Error(ErrorKind::kDegenerateGeometry, "target shape collapses to a point");
  }
  return from_complex(a, to_mean - a * from_mean);
}

LandmarkFrame apply_transform(const SimilarityTransform& t, const LandmarkFrame& frame) {
  const Eigen::Matrix2d m = t.linear();
  Eigen::Matrix<double, kNumLandmarks, 2> pts = frame.points() * m.transpose();
  pts.rowwise() += t.translation.transpose();
  return LandmarkFrame(pts);
}

LandmarkSequence align_sequence(const LandmarkSequence& seq) {
  if (seq.empty()) throw Error(ErrorKind::kEmptyInput, "cannot align an empty sequence");
  const SimilarityTransform t =
      estimate_pinning_transform(seq.frames.front(), canonical_pin_left(), canonical_pin_right());
  LandmarkSequence out;
  out.frame_rate = seq.frame_rate;
  out.frames.reserve(seq.size());
  for (const auto& f : seq.frames) out.frames.push_back(apply_transform(t, f));
  return out;
}

MeanFace compute_mean_face(std::span<const LandmarkSequence> dataset) {
  Eigen::Matrix<double, kNumLandmarks, 2> sum = Eigen::Matrix<double, kNumLandmarks, 2>::Zero();
  std::size_t count = 0;
  for (const auto& seq : dataset) {
    for (const auto& f : seq.frames) {
      sum += f.points();
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorKind::kEmptyInput, "mean face needs at least one frame");
  return MeanFace{LandmarkFrame(sum / static_cast<double>(count)), count};
}

LandmarkSequence remove_identity(const LandmarkSequence& aligned, const MeanFace& mean) {
  if (aligned.empty()) throw Error(ErrorKind::kEmptyInput, "cannot normalize an empty sequence");
  const LandmarkFrame& first = aligned.frames.front();
  const Eigen::Matrix2d a = estimate_similarity_lsq(first, mean.shape).linear();
  LandmarkSequence out;
  out.frame_rate = aligned.frame_rate;
  out.frames.reserve(aligned.size());
  for (const auto& f : aligned.frames) {
    const Eigen::Matrix<double, kNumLandmarks, 2> disp = f.points() - first.points();
    out.frames.emplace_back(mean.shape.points() + disp * a.transpose());
  }
  return out;
}

LandmarkFrame repin_eyes(const LandmarkFrame& frame) {
  return apply_transform(
      estimate_pinning_transform(frame, canonical_pin_left(), canonical_pin_right()), frame);
}

LandmarkFrame normalize(const LandmarkFrame& pixels, double side) {
  return LandmarkFrame(pixels.points() / side);
}

LandmarkFrame denormalize(const LandmarkFrame& normalized, double side) {
  return LandmarkFrame(normalized.points() * side);
}

LandmarkSequence normalize(const LandmarkSequence& pixels, double side) {
  LandmarkSequence out{{}, pixels.frame_rate};
  out.frames.reserve(pixels.size());
  for (const auto& f : pixels.frames) out.frames.push_back(normalize(f, side));
  return out;
}

LandmarkSequence denormalize(const LandmarkSequence& normalized, double side) {
  LandmarkSequence out{{}, normalized.frame_rate};
  out.frames.reserve(normalized.size());
  for (const auto& f : normalized.frames) out.frames.push_back(denormalize(f, side));
  return out;
}

LandmarkSequence resample_frame_rate(const LandmarkSequence& seq, double target_fps) {
  if (!(target_fps > 0.0) || !(seq.frame_rate > 0.0)) {
    throw Error(ErrorKind::kArgument, "frame rates must be positive");
  }
  if (seq.empty() || seq.frame_rate == target_fps) {
    LandmarkSequence copy = seq;
    copy.frame_rate = target_fps;
    return copy;
  }
  const double last_time = static_cast<double>(seq.size() - 1) / seq.frame_rate;
  const auto n_out = static_cast<std::size_t>(std::floor(last_time * target_fps + 1e-9)) + 1;
  LandmarkSequence out{{}, target_fps};
  out.frames.reserve(n_out);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double src = static_cast<double>(k) * seq.frame_rate / target_fps;
    const auto lo = std::min(static_cast<std::size_t>(std::floor(src)), seq.size() - 1);
    const std::size_t hi = std::min(lo + 1, seq.size() - 1);
    const double w = src - static_cast<double>(lo);
    out.frames.emplace_back((1.0 - w) * seq.frames[lo].points() + w * seq.frames[hi].points());
  }
  return out;
}

}  // namespace lark
