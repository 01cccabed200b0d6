#include "vidfeat/masking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace vidfeat {

DetectionMask DetectionMask::filled(int w, int h, bool value) {
  DetectionMask m;
  m.width = w;
  m.height = h;
  m.bits.assign(static_cast<std::size_t>(w) * h, value ? 1 : 0);
  return m;
}

bool DetectionMask::at_point(double x, double y) const {
  const int ix = std::clamp(static_cast<int>(std::lround(x)), 0, width - 1);
  const int iy = std::clamp(static_cast<int>(std::lround(y)), 0, height - 1);
  return at(ix, iy);
}

std::size_t DetectionMask::ones() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
}

double DetectionMask::coverage() const {
  if (bits.empty()) return 0.0;
  return static_cast<double>(ones()) / static_cast<double>(bits.size());
}

std::size_t SubsampledMask::ones() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
}

MaskMode parse_mask_mode(const std::string& name) {
  if (name == "none") return MaskMode::None;
  if (name == "intensity") return MaskMode::Intensity;
  if (name == "binning") return MaskMode::Binning;
  if (name == "temporal") return MaskMode::Temporal;
  throw std::invalid_argument("unknown mask mode '" + name +
                              "' (expected none, intensity, binning or temporal)");
}

const char* to_string(MaskMode mode) {
  switch (mode) {
    case MaskMode::None: return "none";
    case MaskMode::Intensity: return "intensity";
    case MaskMode::Binning: return "binning";
    case MaskMode::Temporal: return "temporal";
  }
  return "?";
}

namespace {
int ceil_div(int a, int b) { return (a + b - 1) / b; }
}  // namespace

SubsampledMask intensity_diff_mask(const GrayFrame& prev_layer, const GrayFrame& cur_layer,
                                   int threshold, int frame_width, int frame_height) {
  if (prev_layer.width != cur_layer.width || prev_layer.height != cur_layer.height) {
    throw std::invalid_argument("intensity_diff_mask: layer dimensions differ (" +
                                std::to_string(prev_layer.width) + "x" + std::to_string(prev_layer.height) +
                                " vs " + std::to_string(cur_layer.width) + "x" +
                                std::to_string(cur_layer.height) + ")");
  }
  if (threshold < 0) throw std::invalid_argument("intensity_diff_mask: threshold must be >= 0");
  if (cur_layer.width <= 0 || cur_layer.height <= 0 || frame_width < cur_layer.width ||
      frame_height < cur_layer.height) {
    throw std::invalid_argument("intensity_diff_mask: layer larger than the frame");
  }
  SubsampledMask m;
  m.width = cur_layer.width;
  m.height = cur_layer.height;
  m.cell_w = ceil_div(frame_width, m.width);
  m.cell_h = ceil_div(frame_height, m.height);
  m.bits.resize(cur_layer.size());
  for (std::size_t i = 0; i < m.bits.size(); ++i) {
    m.bits[i] = std::abs(int{cur_layer.data[i]} - int{prev_layer.data[i]}) > threshold ? 1 : 0;
  }
  return m;
}

BinGrid BinGrid::for_frame(int frame_width, int frame_height, int rows, int cols) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("binning grid must be at least 1x1, got " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
  if (frame_width <= 0 || frame_height <= 0) throw std::invalid_argument("binning grid: empty frame");
  return {rows, cols, ceil_div(frame_width, cols), ceil_div(frame_height, rows)};
}

KeypointHistogram keypoint_histogram(std::span<const Feature> features, int frame_width, int frame_height,
                                     int rows, int cols) {
  KeypointHistogram h;
  h.grid = BinGrid::for_frame(frame_width, frame_height, rows, cols);
  h.counts.assign(static_cast<std::size_t>(rows) * cols, 0);
  for (const Feature& f : features) {
    const double x = f.kp.x;
    const double y = f.kp.y;
    if (!(x >= 0.0 && y >= 0.0 && x < frame_width && y < frame_height)) ++h.clamped;
    const int k = std::clamp(static_cast<int>(std::floor(x / h.grid.bin_w)), 0, cols - 1);
    const int l = std::clamp(static_cast<int>(std::floor(y / h.grid.bin_h)), 0, rows - 1);
    ++h.counts[static_cast<std::size_t>(l) * cols + k];
  }
  return h;
}

BinningMask keypoint_binning_mask(std::span<const Feature> prev_features, int frame_width,
                                  int frame_height, int rows, int cols, int threshold) {
  if (threshold < 0) throw std::invalid_argument("keypoint_binning_mask: threshold must be >= 0");
  const KeypointHistogram h = keypoint_histogram(prev_features, frame_width, frame_height, rows, cols);
  BinningMask out;
  out.clamped = h.clamped;
  out.mask.width = cols;
  out.mask.height = rows;
  out.mask.cell_w = h.grid.bin_w;
  out.mask.cell_h = h.grid.bin_h;
  out.mask.bits.resize(h.counts.size());
  std::transform(h.counts.begin(), h.counts.end(), out.mask.bits.begin(),
                 [threshold](int c) { return static_cast<std::uint8_t>(c >= threshold ? 1 : 0); });
  return out;
}

DetectionMask upsample_mask(const SubsampledMask& m, int width, int height) {
  if (m.cell_w < 1 || m.cell_h < 1 || static_cast<long>(m.cell_w) * m.width < width ||
      static_cast<long>(m.cell_h) * m.height < height) {
    throw std::invalid_argument("upsample_mask: " + std::to_string(m.width) + "x" + std::to_string(m.height) +
                                " cells of " + std::to_string(m.cell_w) + "x" + std::to_string(m.cell_h) +
                                " do not cover " + std::to_string(width) + "x" + std::to_string(height));
  }
  DetectionMask out = DetectionMask::filled(width, height, false);
  std::vector<int> col(static_cast<std::size_t>(width));
  for (int x = 0; x < width; ++x) col[static_cast<std::size_t>(x)] = x / m.cell_w;
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* src = m.bits.data() + static_cast<std::size_t>(y / m.cell_h) * m.width;
    std::uint8_t* dst = out.bits.data() + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) dst[x] = src[col[static_cast<std::size_t>(x)]];
  }
  return out;
}

std::vector<Feature> merge_features(std::span<const Feature> detected, std::span<const Feature> prev,
                                    const DetectionMask& mask) {
  std::vector<Feature> out;
  out.reserve(detected.size() + prev.size());
  for (const Feature& f : detected) {
    if (mask.at_point(f.kp.x, f.kp.y)) out.push_back(f);
  }
  for (const Feature& f : prev) {
    if (mask.at_point(f.kp.x, f.kp.y)) continue;
    Feature p = f;
    p.origin = Origin::Propagated;
    p.age = f.age + 1;
    out.push_back(p);
  }
  return out;
}

int octave_for_sigma(double sigma, int n_octaves) {
  const int o = static_cast<int>(std::floor(std::log2(std::max(sigma, 1.0)) + 1e-9));
  return std::clamp(o, 0, std::max(n_octaves - 1, 0));
}

std::vector<Feature> merge_features(std::span<const Feature> detected, std::span<const Feature> prev,
                                    std::span<const DetectionMask> octave_masks) {
  if (octave_masks.empty()) throw std::invalid_argument("merge_features: no octave masks");
  const int n = static_cast<int>(octave_masks.size());
  auto gate = [&](const Feature& f) {
    return octave_masks[static_cast<std::size_t>(octave_for_sigma(f.kp.sigma, n))].at_point(f.kp.x, f.kp.y);
  };
  std::vector<Feature> out;
  out.reserve(detected.size() + prev.size());
  for (const Feature& f : detected) {
    if (gate(f)) out.push_back(f);
  }
  for (const Feature& f : prev) {
    if (gate(f)) continue;
    Feature p = f;
    p.origin = Origin::Propagated;
    p.age = f.age + 1;
    out.push_back(p);
  }
  return out;
}

}  // namespace vidfeat
