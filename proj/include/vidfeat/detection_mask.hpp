#pragma once

#include <cstdint>
#include <vector>

namespace vidfeat {

// Full-resolution binary gate: detection runs where the mask is 1.
struct DetectionMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  static DetectionMask filled(int w, int h, bool value);

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }

  // Lookup at a rounded, clamped sub-pixel location.
  bool at_point(double x, double y) const;

  std::size_t ones() const;
  double coverage() const;
};

// Coarse mask; each cell covers cell_w x cell_h frame pixels.
struct SubsampledMask {
  int width = 0;
  int height = 0;
  int cell_w = 1;
  int cell_h = 1;
  std::vector<std::uint8_t> bits;

  bool at(int k, int l) const { return bits[static_cast<std::size_t>(l) * width + k] != 0; }
  std::size_t ones() const;
};

}  // namespace vidfeat
