#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

#include "lark/audio.hpp"
#include "lark/errors.hpp"

namespace lark {
namespace {

constexpr double kCutoffFraction = 0.95;
constexpr double kZeroCrossings = 16.0;
constexpr double kKaiserBeta = 8.6;
constexpr std::int64_t kMaxTablePhases = 8192;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

class SincKernel {
 public:
  SincKernel(double cutoff, int half_width)
      : cutoff_(cutoff), half_width_(half_width), norm_(std::cyl_bessel_i(0.0, kKaiserBeta)) {}

  // Weight of the input sample at signed distance x (in input samples).
  double operator()(double x) const {
    const double r = x / half_width_;
    if (std::abs(r) >= 1.0) return 0.0;
    const double window = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / norm_;
    return cutoff_ * sinc(cutoff_ * x) * window;
  }

  int half_width() const { return half_width_; }

 private:
  double cutoff_;
  int half_width_;
  double norm_;
};

}  // namespace

AudioClip resample(const AudioClip& clip, double target_rate) {
  if (!(target_rate > 0.0)) throw Error(ErrorKind::kArgument, "target rate must be positive");
  if (target_rate == clip.sample_rate()) return clip;

  // Rates are expressed in integer millihertz so that common rate pairs reduce
  // to small up/down factors.
  const auto src = static_cast<std::int64_t>(std::llround(clip.sample_rate() * 1000.0));
  const auto dst = static_cast<std::int64_t>(std::llround(target_rate * 1000.0));
  const std::int64_t g = std::gcd(src, dst);
  const std::int64_t up = dst / g;
  const std::int64_t down = src / g;

  const double ratio = static_cast<double>(dst) / static_cast<double>(src);
  const double cutoff = kCutoffFraction * std::min(1.0, ratio);
  const SincKernel kernel(cutoff, static_cast<int>(std::ceil(kZeroCrossings / cutoff)));
  const int taps = 2 * kernel.half_width();

  const auto in = clip.samples();
  const auto n_in = static_cast<std::int64_t>(in.size());
  const std::int64_t n_out = n_in * up / down;

  // Phase p corresponds to a fractional input offset of p / up.
  std::vector<double> table;
  const bool tabulated = up <= kMaxTablePhases;
  if (tabulated) {
    table.resize(static_cast<std::size_t>(up * taps));
    for (std::int64_t p = 0; p < up; ++p) {
      const double frac = static_cast<double>(p) / static_cast<double>(up);
      for (int k = 0; k < taps; ++k) {
        const int offset = k - kernel.half_width() + 1;
        table[static_cast<std::size_t>(p * taps + k)] = kernel(offset - frac);
      }
    }
  }

  std::vector<double> out(static_cast<std::size_t>(n_out), 0.0);
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t pos = n * down;
    const std::int64_t base = pos / up;
    const std::int64_t phase = pos % up;
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    double acc = 0.0;
    for (int k = 0; k < taps; ++k) {
      const std::int64_t idx = base + k - kernel.half_width() + 1;
      if (idx < 0 || idx >= n_in) continue;
      const double w = tabulated ? table[static_cast<std::size_t>(phase * taps + k)]
                                 : kernel(static_cast<double>(k - kernel.half_width() + 1) - frac);
      acc += w * in[static_cast<std::size_t>(idx)];
    }
    out[static_cast<std::size_t>(n)] = acc;
  }
  return AudioClip(std::move(out), target_rate);
}

}  // namespace lark
