#include "vidfeat/descriptor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>

namespace vidfeat {

// ---------------------------------------------------------------------------
// BinaryDescriptor

std::array<std::uint8_t, kDescriptorBytes> BinaryDescriptor::to_bytes() const {
  std::array<std::uint8_t, kDescriptorBytes> out{};
  for (int bit = 0; bit < kDescriptorBits; ++bit) {
    if (test(bit)) out[static_cast<std::size_t>(bit / 8)] |= static_cast<std::uint8_t>(0x80u >> (bit % 8));
  }
  return out;
}

BinaryDescriptor BinaryDescriptor::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kDescriptorBytes) {
    throw std::invalid_argument("descriptor must be " + std::to_string(kDescriptorBytes) +
                                " bytes, got " + std::to_string(bytes.size()));
  }
  BinaryDescriptor d;
  for (int bit = 0; bit < kDescriptorBits; ++bit) {
    if (bytes[static_cast<std::size_t>(bit / 8)] & (0x80u >> (bit % 8))) d.set(bit);
  }
  return d;
}

std::string BinaryDescriptor::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * kDescriptorBytes);
  for (std::uint8_t b : to_bytes()) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 15]);
  }
  return s;
}

BinaryDescriptor BinaryDescriptor::from_hex(const std::string& hex) {
  if (hex.size() != 2 * kDescriptorBytes) {
    throw std::invalid_argument("descriptor hex must have " + std::to_string(2 * kDescriptorBytes) +
                                " digits, got " + std::to_string(hex.size()));
  }
  auto nibble = [&](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    throw std::invalid_argument(std::string("invalid hex digit '") + c + "'");
  };
  std::array<std::uint8_t, kDescriptorBytes> bytes{};
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return from_bytes(bytes);
}

int hamming(const BinaryDescriptor& a, const BinaryDescriptor& b) {
  int n = 0;
  for (int i = 0; i < BinaryDescriptor::kWords; ++i) {
    n += std::popcount(a.words()[static_cast<std::size_t>(i)] ^ b.words()[static_cast<std::size_t>(i)]);
  }
  return n;
}

int hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("hamming: length mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + " bytes)");
  }
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
  return n;
}

const char* to_string(Origin origin) {
  return origin == Origin::Detected ? "detected" : "propagated";
}

// ---------------------------------------------------------------------------
// SamplingPattern

SamplingPattern SamplingPattern::generate(std::span<const double> radii, std::span<const int> counts,
                                          double d_max, double d_min) {
  if (radii.size() != counts.size() || radii.empty()) {
    throw std::invalid_argument("pattern: radii and counts must be non-empty and equal length");
  }
  constexpr double kSmoothingScale = 1.3;
  SamplingPattern p;
  for (std::size_t ring = 0; ring < radii.size(); ++ring) {
    const int n = counts[ring];
    for (int k = 0; k < n; ++k) {
      const double alpha = 2.0 * std::numbers::pi * k / n;
      PatternPoint pt;
      pt.x = radii[ring] * std::cos(alpha);
      pt.y = radii[ring] * std::sin(alpha);
      pt.smoothing = radii[ring] == 0.0 ? kSmoothingScale * 0.5
                                        : kSmoothingScale * radii[ring] * std::sin(std::numbers::pi / n);
      p.extent_ = std::max(p.extent_, radii[ring] + pt.smoothing);
      p.points_.push_back(pt);
    }
  }
  const double max_sq = d_max * d_max;
  const double min_sq = d_min * d_min;
  for (int i = 1; i < static_cast<int>(p.points_.size()); ++i) {
    for (int j = 0; j < i; ++j) {
      const double dx = p.points_[static_cast<std::size_t>(j)].x - p.points_[static_cast<std::size_t>(i)].x;
      const double dy = p.points_[static_cast<std::size_t>(j)].y - p.points_[static_cast<std::size_t>(i)].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 > min_sq) p.long_pairs_.push_back({i, j});
      if (d2 < max_sq) p.short_pairs_.push_back({i, j});
    }
  }
  if (p.short_pairs_.size() != static_cast<std::size_t>(kDescriptorBits)) {
    throw std::invalid_argument("pattern yields " + std::to_string(p.short_pairs_.size()) +
                                " short pairs, need " + std::to_string(kDescriptorBits));
  }
  return p;
}

const SamplingPattern& SamplingPattern::standard() {
  static const SamplingPattern pattern = [] {
    constexpr double f = 0.85;
    const std::array<double, 5> radii{f * 0.0, f * 2.9, f * 4.9, f * 7.4, f * 10.8};
    const std::array<int, 5> counts{1, 10, 14, 15, 20};
    return generate(radii, counts, 5.85, 8.2);
  }();
  return pattern;
}

// ---------------------------------------------------------------------------
// Sampling

IntegralImage::IntegralImage(const GrayFrame& frame)
    : w_(frame.width), h_(frame.height),
      sums_((static_cast<std::size_t>(frame.width) + 1) * (frame.height + 1), 0) {
  const std::size_t stride = static_cast<std::size_t>(w_) + 1;
  for (int y = 0; y < h_; ++y) {
    const std::uint8_t* row = frame.row(y);
    std::uint32_t run = 0;
    std::uint32_t* out = sums_.data() + (y + 1) * stride;
    const std::uint32_t* above = sums_.data() + y * stride;
    for (int x = 0; x < w_; ++x) {
      run += row[x];
      out[x + 1] = above[x + 1] + run;
    }
  }
}

SmoothedValue smoothed_intensity(const IntegralImage& img, double x, double y, double half_width) {
  const double h = std::max(half_width, 0.5) + 0.5;
  // Pixels k with x - h < k < x + h.
  int x0 = static_cast<int>(std::floor(x - h)) + 1;
  int x1 = static_cast<int>(std::ceil(x + h)) - 1;
  int y0 = static_cast<int>(std::floor(y - h)) + 1;
  int y1 = static_cast<int>(std::ceil(y + h)) - 1;
  x0 = std::clamp(x0, 0, img.width() - 1);
  x1 = std::clamp(x1, x0, img.width() - 1);
  y0 = std::clamp(y0, 0, img.height() - 1);
  y1 = std::clamp(y1, y0, img.height() - 1);
  const auto area = static_cast<std::uint32_t>((x1 - x0 + 1) * (y1 - y0 + 1));
  return {img.box_sum(x0, y0, x1, y1), area};
}

PatternPoint place_point(const PatternPoint& p, const Keypoint& kp, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {kp.x + kp.sigma * (c * p.x - s * p.y), kp.y + kp.sigma * (s * p.x + c * p.y),
          kp.sigma * p.smoothing};
}

bool footprint_inside(const Keypoint& kp, int width, int height) {
  const double margin = 3.0 * kp.sigma;
  return kp.x >= margin && kp.y >= margin && kp.x <= width - 1 - margin &&
         kp.y <= height - 1 - margin;
}

namespace {

void sample_pattern(const IntegralImage& img, const Keypoint& kp, double theta,
                    const SamplingPattern& pattern, std::vector<SmoothedValue>& out) {
  const auto& pts = pattern.points();
  out.resize(pts.size());
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double px = kp.x + kp.sigma * (c * pts[i].x - s * pts[i].y);
    const double py = kp.y + kp.sigma * (s * pts[i].x + c * pts[i].y);
    out[i] = smoothed_intensity(img, px, py, kp.sigma * pts[i].smoothing);
  }
}

double orientation_from_samples(const std::vector<SmoothedValue>& values, const SamplingPattern& pattern,
                                double sigma) {
  const auto& pts = pattern.points();
  double gx = 0.0;
  double gy = 0.0;
  for (const PointPair& pair : pattern.long_pairs()) {
    const auto& a = pts[static_cast<std::size_t>(pair.first)];
    const auto& b = pts[static_cast<std::size_t>(pair.second)];
    const double dx = (b.x - a.x) * sigma;
    const double dy = (b.y - a.y) * sigma;
    const double dist_sq = dx * dx + dy * dy;
    const double di = values[static_cast<std::size_t>(pair.second)].mean() -
                      values[static_cast<std::size_t>(pair.first)].mean();
    gx += di * dx / dist_sq;
    gy += di * dy / dist_sq;
  }
  // Cancellation leaves tiny residues on flat patches.
  if (std::abs(gx) < 1e-9 && std::abs(gy) < 1e-9) return 0.0;
  const double theta = std::atan2(gy, gx);
  return theta <= -std::numbers::pi ? std::numbers::pi : theta;
}

BinaryDescriptor bits_from_samples(const std::vector<SmoothedValue>& values, const SamplingPattern& pattern) {
  BinaryDescriptor d;
  const auto& pairs = pattern.short_pairs();
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const auto& first = values[static_cast<std::size_t>(pairs[j].first)];
    const auto& second = values[static_cast<std::size_t>(pairs[j].second)];
    if (first.greater_than(second)) d.set(static_cast<int>(j));
  }
  return d;
}

}  // namespace

double estimate_orientation(const IntegralImage& img, const Keypoint& kp, const SamplingPattern& pattern) {
  std::vector<SmoothedValue> values;
  sample_pattern(img, kp, 0.0, pattern, values);
  return orientation_from_samples(values, pattern, kp.sigma);
}

double estimate_orientation(const GrayFrame& layer, const Keypoint& kp, const SamplingPattern& pattern) {
  return estimate_orientation(IntegralImage(layer), kp, pattern);
}

std::optional<BinaryDescriptor> describe(const IntegralImage& img, const Keypoint& kp, double theta,
                                         const SamplingPattern& pattern) {
  if (!footprint_inside(kp, img.width(), img.height())) return std::nullopt;
  std::vector<SmoothedValue> values;
  sample_pattern(img, kp, theta, pattern, values);
  return bits_from_samples(values, pattern);
}

std::optional<BinaryDescriptor> describe(const GrayFrame& layer, const Keypoint& kp, double theta,
                                         const SamplingPattern& pattern) {
  return describe(IntegralImage(layer), kp, theta, pattern);
}

DescribeResult describe_keypoints(const GrayFrame& frame, std::span<const Keypoint> keypoints,
                                  const DescriptorConfig& cfg) {
  DescribeResult result;
  if (keypoints.empty()) return result;
  const IntegralImage integral(frame);
  const SamplingPattern& pattern = SamplingPattern::standard();

  std::vector<std::optional<Feature>> slots(keypoints.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<SmoothedValue> values;
    for (std::size_t i = begin; i < end; ++i) {
      Keypoint kp = keypoints[i];
      if (!footprint_inside(kp, frame.width, frame.height)) continue;
      if (cfg.rotation_invariant) {
        sample_pattern(integral, kp, 0.0, pattern, values);
        kp.theta = orientation_from_samples(values, pattern, kp.sigma);
      } else {
        kp.theta = 0.0;
      }
      sample_pattern(integral, kp, kp.theta, pattern, values);
      slots[i] = Feature{kp, bits_from_samples(values, pattern), Origin::Detected, 0};
    }
  };

  const std::size_t n = keypoints.size();
  const std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(cfg.threads, 1)), 1, n);
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }

  result.features.reserve(n);
  for (auto& s : slots) {
    if (s) {
      result.features.push_back(std::move(*s));
    } else {
      ++result.dropped;
    }
  }
  return result;
}

}  // namespace vidfeat
