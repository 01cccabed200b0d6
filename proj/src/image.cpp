#include "vidfeat/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace vidfeat {

GrayFrame::GrayFrame(int w, int h, std::uint8_t fill, int frame_index)
    : width(w), height(h), index(frame_index) {
  if (w <= 0 || h <= 0) {
    throw std::invalid_argument("GrayFrame: dimensions must be positive, got " +
                                std::to_string(w) + "x" + std::to_string(h));
  }
  data.assign(static_cast<std::size_t>(w) * h, fill);
}

GrayFrame::GrayFrame(int w, int h, std::vector<std::uint8_t> pixels, int frame_index)
    : width(w), height(h), data(std::move(pixels)), index(frame_index) {
  if (w <= 0 || h <= 0) {
    throw std::invalid_argument("GrayFrame: dimensions must be positive, got " +
                                std::to_string(w) + "x" + std::to_string(h));
  }
  if (data.size() != static_cast<std::size_t>(w) * h) {
    throw std::invalid_argument("GrayFrame: data length " + std::to_string(data.size()) +
                                " does not match " + std::to_string(w) + "x" +
                                std::to_string(h));
  }
}

double GrayFrame::mean() const {
  if (data.empty()) return 0.0;
  const auto sum = std::accumulate(data.begin(), data.end(), std::uint64_t{0});
  return static_cast<double>(sum) / static_cast<double>(data.size());
}

double sample_bilinear(const GrayFrame& frame, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(frame.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(frame.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, frame.width - 1);
  const int y1 = std::min(y0 + 1, frame.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * frame.at(x0, y0) + fx * frame.at(x1, y0);
  const double bottom = (1.0 - fx) * frame.at(x0, y1) + fx * frame.at(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

bool same_pixels(const GrayFrame& a, const GrayFrame& b) {
  return a.width == b.width && a.height == b.height && a.data == b.data;
}

}  // namespace vidfeat
