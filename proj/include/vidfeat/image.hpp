#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vidfeat {

// Row-major 8-bit grayscale frame.
struct GrayFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
  int index = 0;

  GrayFrame() = default;
  GrayFrame(int w, int h, std::uint8_t fill = 0, int frame_index = 0);
  // Throws std::invalid_argument unless data.size() == w * h and w, h > 0.
  GrayFrame(int w, int h, std::vector<std::uint8_t> pixels, int frame_index = 0);

  bool empty() const { return data.empty(); }
  std::size_t size() const { return data.size(); }

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }

  const std::uint8_t* row(int y) const { return data.data() + static_cast<std::size_t>(y) * width; }
  std::uint8_t* row(int y) { return data.data() + static_cast<std::size_t>(y) * width; }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  double mean() const;
};

// Bilinear interpolation at (x, y); coordinates are clamped to the frame.
double sample_bilinear(const GrayFrame& frame, double x, double y);

// Pixel-exact equality of dimensions and content (frame index ignored).
bool same_pixels(const GrayFrame& a, const GrayFrame& b);

}  // namespace vidfeat
