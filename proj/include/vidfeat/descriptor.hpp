#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vidfeat/features.hpp"
#include "vidfeat/image.hpp"

namespace vidfeat {

struct PatternPoint {
  double x = 0.0;  // offset at sigma = 1, theta = 0
  double y = 0.0;
  double smoothing = 0.5;  // box half-width at sigma = 1
};

struct PointPair {
  int first = 0;
  int second = 0;
};

/// Concentric-ring sampling pattern. Short pairs (distance below d_max) give
/// the descriptor bits; long pairs (distance above d_min) estimate orientation.
///
/// The standard pattern is a versioned asset: 60 points on rings of radius
/// 0.85 * {0, 2.9, 4.9, 7.4, 10.8} holding {1, 10, 14, 15, 20} points, with
/// d_max = 5.85 and d_min = 8.2. It yields exactly 512 short and 870 long pairs.
/// Any change to the generator must bump kVersion.
class SamplingPattern {
 public:
  static constexpr int kVersion = 1;

  static const SamplingPattern& standard();

  // Throws std::invalid_argument if the thresholds do not produce exactly
  // kDescriptorBits short pairs.
  static SamplingPattern generate(std::span<const double> radii, std::span<const int> counts,
                                  double d_max, double d_min);

  const std::vector<PatternPoint>& points() const { return points_; }
  const std::vector<PointPair>& short_pairs() const { return short_pairs_; }
  const std::vector<PointPair>& long_pairs() const { return long_pairs_; }

  // Largest radius + smoothing at sigma = 1.
  double extent() const { return extent_; }

 private:
  std::vector<PatternPoint> points_;
  std::vector<PointPair> short_pairs_;
  std::vector<PointPair> long_pairs_;
  double extent_ = 0.0;
};

// Summed-area table; box sums in O(1).
class IntegralImage {
 public:
  explicit IntegralImage(const GrayFrame& frame);

  int width() const { return w_; }
  int height() const { return h_; }

  // Inclusive pixel rectangle, already clamped to the image.
  std::uint32_t box_sum(int x0, int y0, int x1, int y1) const {
    const std::size_t stride = static_cast<std::size_t>(w_) + 1;
    return sums_[(y1 + 1) * stride + (x1 + 1)] - sums_[y0 * stride + (x1 + 1)] -
           sums_[(y1 + 1) * stride + x0] + sums_[y0 * stride + x0];
  }

 private:
  int w_;
  int h_;
  std::vector<std::uint32_t> sums_;
};

// Box-smoothed intensity as an exact fraction sum / area.
struct SmoothedValue {
  std::uint32_t sum = 0;
  std::uint32_t area = 1;

  double mean() const { return static_cast<double>(sum) / area; }
  bool greater_than(const SmoothedValue& o) const {
    return static_cast<std::uint64_t>(sum) * o.area > static_cast<std::uint64_t>(o.sum) * area;
  }
};

// Box of pixels within half-width h (+ half a pixel) of (x, y), clamped to the image.
SmoothedValue smoothed_intensity(const IntegralImage& img, double x, double y, double half_width);

// Pattern point i of kp after scaling by sigma and rotating by theta.
PatternPoint place_point(const PatternPoint& p, const Keypoint& kp, double theta);

// Keypoints with centre closer than 3 sigma to the border are rejected.
bool footprint_inside(const Keypoint& kp, int width, int height);

// atan2 of the mean long-pair gradient, in (-pi, pi]; 0 for a zero gradient.
double estimate_orientation(const IntegralImage& img, const Keypoint& kp,
                            const SamplingPattern& pattern = SamplingPattern::standard());
double estimate_orientation(const GrayFrame& layer, const Keypoint& kp,
                            const SamplingPattern& pattern = SamplingPattern::standard());

// Bit j = 1 iff the smoothed intensity at the first point of short pair j
// exceeds the one at the second point. nullopt when the footprint rule
// rejects the keypoint.
std::optional<BinaryDescriptor> describe(const IntegralImage& img, const Keypoint& kp, double theta,
                                         const SamplingPattern& pattern = SamplingPattern::standard());
std::optional<BinaryDescriptor> describe(const GrayFrame& layer, const Keypoint& kp, double theta,
                                         const SamplingPattern& pattern = SamplingPattern::standard());

struct DescriptorConfig {
  bool rotation_invariant = true;
  int threads = 1;
};

struct DescribeResult {
  std::vector<Feature> features;  // origin = Detected, age = 0
  std::size_t dropped = 0;        // keypoints rejected by the footprint rule
};

DescribeResult describe_keypoints(const GrayFrame& frame, std::span<const Keypoint> keypoints,
                                  const DescriptorConfig& cfg = {});

}  // namespace vidfeat
