#include "vidfeat/detector.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <stdexcept>
#include <string>

namespace vidfeat {

namespace {

struct CircleOffsets {
  std::array<std::ptrdiff_t, 16> off{};
  explicit CircleOffsets(int stride) {
    for (int i = 0; i < 16; ++i) off[i] = static_cast<std::ptrdiff_t>(kCircleDy[i]) * stride + kCircleDx[i];
  }
};

// Max over arc start positions of the min signed difference along the arc.
inline int best_arc(const std::array<int, 16>& d, int arc_len) {
  int best = -256;
  for (int start = 0; start < 16; ++start) {
    int m = 256;
    for (int k = 0; k < arc_len; ++k) {
      m = std::min(m, d[(start + k) & 15]);
      if (m <= best) break;
    }
    best = std::max(best, m);
  }
  return best;
}

inline int score_at(const std::uint8_t* p, const CircleOffsets& c, int arc_len) {
  const int centre = *p;
  std::array<int, 16> bright{};
  std::array<int, 16> dark{};
  for (int i = 0; i < 16; ++i) {
    bright[i] = p[c.off[i]] - centre;
    dark[i] = -bright[i];
  }
  // "all > I_p + t" with integer t means every difference >= t + 1.
  const int s = std::max(best_arc(bright, arc_len), best_arc(dark, arc_len)) - 1;
  return std::max(s, 0);
}

// Any arc of n contiguous circle pixels covers at least n / 4 of the four
// compass pixels (indices 0, 4, 8, 12).
inline bool passes_compass_test(const std::uint8_t* p, const CircleOffsets& c, int t, int need) {
  const int hi = *p + t;
  const int lo = *p - t;
  int nb = 0;
  int nd = 0;
  for (int i = 0; i < 16; i += 4) {
    const int v = p[c.off[i]];
    nb += v > hi;
    nd += v < lo;
  }
  return nb >= need || nd >= need;
}

void check_arc(int arc_len) {
  if (arc_len < 1 || arc_len > 16) {
    throw std::invalid_argument("arc_len must lie in [1, 16], got " + std::to_string(arc_len));
  }
}

}  // namespace

int ast_corner_score(const GrayFrame& layer, int x, int y, int arc_len) {
  check_arc(arc_len);
  if (x < kCircleRadius || y < kCircleRadius || x >= layer.width - kCircleRadius ||
      y >= layer.height - kCircleRadius) {
    throw std::invalid_argument("ast_corner_score: (" + std::to_string(x) + ", " +
                                std::to_string(y) + ") is within 3 pixels of the border of a " +
                                std::to_string(layer.width) + "x" +
                                std::to_string(layer.height) + " layer");
  }
  const CircleOffsets circle(layer.width);
  return score_at(layer.row(y) + x, circle, arc_len);
}

std::vector<Candidate> detect_candidates(const GrayFrame& layer, int threshold, LayerGating gating,
                                         int layer_index, int arc_len) {
  check_arc(arc_len);
  std::vector<Candidate> out;
  const int r = kCircleRadius;
  if (layer.width <= 2 * r || layer.height <= 2 * r) return out;

  const DetectionMask* mask = gating.mask;
  std::vector<int> mask_col;
  if (mask != nullptr) {
    if (mask->ones() == 0) return out;
    mask_col.resize(static_cast<std::size_t>(layer.width));
    for (int x = 0; x < layer.width; ++x) {
      const double fx = (x + 0.5) / gating.scale - 0.5;
      mask_col[static_cast<std::size_t>(x)] =
          std::clamp(static_cast<int>(std::lround(fx)), 0, mask->width - 1);
    }
  }

  const CircleOffsets circle(layer.width);
  const int need = threshold > 0 ? arc_len / 4 : 0;
  for (int y = r; y < layer.height - r; ++y) {
    const std::uint8_t* row = layer.row(y);
    const std::uint8_t* mask_row = nullptr;
    if (mask != nullptr) {
      const double fy = (y + 0.5) / gating.scale - 0.5;
      const int my = std::clamp(static_cast<int>(std::lround(fy)), 0, mask->height - 1);
      mask_row = mask->bits.data() + static_cast<std::size_t>(my) * mask->width;
    }
    for (int x = r; x < layer.width - r; ++x) {
      if (mask_row != nullptr && mask_row[mask_col[static_cast<std::size_t>(x)]] == 0) continue;
      const std::uint8_t* p = row + x;
      if (need > 0 && !passes_compass_test(p, circle, threshold, need)) continue;
      const int s = score_at(p, circle, arc_len);
      if (s >= threshold) out.push_back({x, y, layer_index, s});
    }
  }
  return out;
}

QuadraticPeak fit_quadratic_3x3(std::span<const double, 9> patch) {
  // Orthogonal basis over the 3x3 grid: 1, u, v, u^2 - 2/3, v^2 - 2/3, uv.
  double sum = 0.0, su = 0.0, sv = 0.0, suv = 0.0, suu = 0.0, svv = 0.0;
  for (int v = -1; v <= 1; ++v) {
    for (int u = -1; u <= 1; ++u) {
      const double s = patch[static_cast<std::size_t>((v + 1) * 3 + (u + 1))];
      sum += s;
      su += s * u;
      sv += s * v;
      suv += s * u * v;
      suu += s * (u * u - 2.0 / 3.0);
      svv += s * (v * v - 2.0 / 3.0);
    }
  }
  const double a = suu / 2.0;
  const double b = svv / 2.0;
  const double c = suv / 4.0;
  const double d = su / 6.0;
  const double e = sv / 6.0;
  const double f = sum / 9.0 - (2.0 / 3.0) * (a + b);

  QuadraticPeak peak;
  peak.value = patch[4];
  const double det = 4.0 * a * b - c * c;
  if (!(a < 0.0 && det > 0.0)) return peak;
  const double u = (c * e - 2.0 * b * d) / det;
  const double v = (c * d - 2.0 * a * e) / det;
  if (std::abs(u) >= 1.0 || std::abs(v) >= 1.0) return peak;
  peak.dx = u;
  peak.dy = v;
  peak.value = a * u * u + b * v * v + c * u * v + d * u + e * v + f;
  peak.valid = true;
  return peak;
}

namespace {

class ScoreMap {
 public:
  ScoreMap(int w, int h) : w_(w), h_(h), s_(static_cast<std::size_t>(w) * h, 0) {}
  int width() const { return w_; }
  int height() const { return h_; }
  int at(int x, int y) const {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return 0;
    return s_[static_cast<std::size_t>(y) * w_ + x];
  }
  void set(int x, int y, int v) { s_[static_cast<std::size_t>(y) * w_ + x] = static_cast<std::uint8_t>(v); }

  std::array<double, 9> patch(int x, int y) const {
    std::array<double, 9> p{};
    for (int v = -1; v <= 1; ++v)
      for (int u = -1; u <= 1; ++u) p[static_cast<std::size_t>((v + 1) * 3 + u + 1)] = at(x + u, y + v);
    return p;
  }

 private:
  int w_;
  int h_;
  std::vector<std::uint8_t> s_;
};

// Nearest pixel in `to` for a pixel of `from`.
inline std::pair<int, int> project(const PyramidLayer& from, const PyramidLayer& to, double x,
                                   double y) {
  const double px = to.to_layer(from.to_frame(x));
  const double py = to.to_layer(from.to_frame(y));
  return {static_cast<int>(std::lround(px)), static_cast<int>(std::lround(py))};
}

double neighbour_layer_max(const ScoreMap& map, int x, int y) {
  const auto patch = map.patch(x, y);
  const QuadraticPeak peak = fit_quadratic_3x3(patch);
  if (peak.valid) return peak.value;
  return *std::max_element(patch.begin(), patch.end());
}

// Vertex of the parabola through three (position, value) samples, clamped
// to [x0, x2]; returns x1 when the curvature is not negative.
double parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double d0 = (x0 - x1) * (x0 - x2);
  const double d1 = (x1 - x0) * (x1 - x2);
  const double d2 = (x2 - x0) * (x2 - x1);
  const double a = y0 / d0 + y1 / d1 + y2 / d2;
  if (!(a < 0.0)) return x1;
  const double b = -y0 * (x1 + x2) / d0 - y1 * (x0 + x2) / d1 - y2 * (x0 + x1) / d2;
  return std::clamp(-b / (2.0 * a), std::min(x0, x2), std::max(x0, x2));
}

}  // namespace

std::vector<Keypoint> nms_and_refine(std::span<const std::vector<Candidate>> per_layer,
                                     const ScaleSpacePyramid& pyramid) {
  if (per_layer.size() != pyramid.size()) {
    throw std::invalid_argument("nms_and_refine: expected " + std::to_string(pyramid.size()) +
                                " candidate lists, got " + std::to_string(per_layer.size()));
  }
  const std::size_t n_layers = pyramid.size();
  std::vector<ScoreMap> maps;
  maps.reserve(n_layers);
  for (std::size_t i = 0; i < n_layers; ++i) {
    const GrayFrame& img = pyramid.layer(i).image;
    maps.emplace_back(img.width, img.height);
    for (const Candidate& c : per_layer[i]) maps.back().set(c.x, c.y, c.score);
  }

  const GrayFrame& base = pyramid.layer(0).image;
  std::vector<Keypoint> out;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const PyramidLayer& layer = pyramid.layer(i);
    const ScoreMap& map = maps[i];
    const bool has_below = i > 0;
    const bool has_above = i + 1 < n_layers;

    for (const Candidate& c : per_layer[i]) {
      const int s = c.score;
      bool is_max = true;
      for (int v = -1; v <= 1 && is_max; ++v)
        for (int u = -1; u <= 1; ++u)
          if ((u != 0 || v != 0) && map.at(c.x + u, c.y + v) >= s) {
            is_max = false;
            break;
          }
      if (!is_max) continue;

      std::pair<int, int> p_below{};
      std::pair<int, int> p_above{};
      if (has_below) {
        p_below = project(layer, pyramid.layer(i - 1), c.x, c.y);
        if (maps[i - 1].at(p_below.first, p_below.second) >= s) continue;
      }
      if (has_above) {
        p_above = project(layer, pyramid.layer(i + 1), c.x, c.y);
        if (maps[i + 1].at(p_above.first, p_above.second) >= s) continue;
      }

      const QuadraticPeak own = fit_quadratic_3x3(map.patch(c.x, c.y));
      const double own_value = own.valid ? own.value : static_cast<double>(s);
      const double log_sigma = -std::log2(layer.scale);
      double refined_log_sigma = log_sigma;
      double refined_score = own_value;
      if (has_below && has_above) {
        const double below = neighbour_layer_max(maps[i - 1], p_below.first, p_below.second);
        const double above = neighbour_layer_max(maps[i + 1], p_above.first, p_above.second);
        const double l0 = -std::log2(pyramid.layer(i - 1).scale);
        const double l2 = -std::log2(pyramid.layer(i + 1).scale);
        refined_log_sigma = parabola_vertex(l0, below, log_sigma, own_value, l2, above);
      }

      Keypoint kp;
      kp.x = std::clamp(layer.to_frame(c.x + own.dx), 0.0, std::nextafter(static_cast<double>(base.width), 0.0));
      kp.y = std::clamp(layer.to_frame(c.y + own.dy), 0.0, std::nextafter(static_cast<double>(base.height), 0.0));
      kp.sigma = std::exp2(refined_log_sigma);
      kp.theta = 0.0;
      kp.score = refined_score;
      out.push_back(kp);
    }
  }
  return out;
}

std::vector<Keypoint> detect_keypoints(const ScaleSpacePyramid& pyramid, const DetectorConfig& cfg,
                                       std::span<const DetectionMask* const> layer_masks) {
  if (pyramid.empty()) return {};
  const std::size_t n = pyramid.size();
  if (layer_masks.size() != n) {
    throw std::invalid_argument("detect_keypoints: expected " + std::to_string(n) + " layer masks, got " +
                                std::to_string(layer_masks.size()));
  }
  const GrayFrame& base = pyramid.layer(0).image;
  for (const DetectionMask* mask : layer_masks) {
    if (mask != nullptr && (mask->width != base.width || mask->height != base.height)) {
      throw std::invalid_argument("detect_keypoints: mask " + std::to_string(mask->width) + "x" +
                                  std::to_string(mask->height) + " does not match frame " +
                                  std::to_string(base.width) + "x" + std::to_string(base.height));
    }
  }
  std::vector<std::vector<Candidate>> per_layer(n);
  auto run = [&](std::size_t i) {
    const PyramidLayer& layer = pyramid.layer(i);
    per_layer[i] = detect_candidates(layer.image, cfg.threshold, {layer_masks[i], layer.scale},
                                     static_cast<int>(i), cfg.arc_len);
  };
  if (cfg.threads > 1) {
    std::vector<std::future<void>> jobs;
    jobs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) jobs.push_back(std::async(std::launch::async, run, i));
    for (auto& j : jobs) j.get();
  } else {
    for (std::size_t i = 0; i < n; ++i) run(i);
  }
  return nms_and_refine(per_layer, pyramid);
}

std::vector<Keypoint> detect_keypoints(const ScaleSpacePyramid& pyramid, const DetectorConfig& cfg,
                                       const DetectionMask* mask) {
  const std::vector<const DetectionMask*> masks(pyramid.size(), mask);
  return detect_keypoints(pyramid, cfg, masks);
}

}  // namespace vidfeat
