#include "vidfeat/pyramid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vidfeat {

namespace {

// Source taps of output column/row i under the 1.5x reduction. Weights are
// doubled so that they stay integral: (2, 1) for even i, (1, 2) for odd i.
struct Taps {
  int first;
  int w_first;
  int w_second;
};

inline Taps two_thirds_taps(int i) {
  const int k = i / 2;
  if (i % 2 == 0) return {3 * k, 2, 1};
  return {3 * k + 1, 1, 2};
}

std::string dims(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

}  // namespace

GrayFrame half_sample(const GrayFrame& src) {
  const int w = src.width / 2;
  const int h = src.height / 2;
  if (w == 0 || h == 0) {
    throw std::invalid_argument("half_sample: " + dims(src.width, src.height) +
                                " is too small to halve");
  }
  GrayFrame dst(w, h, std::uint8_t{0}, src.index);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* r0 = src.row(2 * y);
    const std::uint8_t* r1 = src.row(2 * y + 1);
    std::uint8_t* out = dst.row(y);
    for (int x = 0; x < w; ++x) {
      const int sum = r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1];
      out[x] = static_cast<std::uint8_t>((sum + 2) >> 2);
    }
  }
  return dst;
}

GrayFrame two_thirds_sample(const GrayFrame& src) {
  const int w = (2 * src.width) / 3;
  const int h = (2 * src.height) / 3;
  if (w == 0 || h == 0) {
    throw std::invalid_argument("two_thirds_sample: " + dims(src.width, src.height) +
                                " is too small to reduce");
  }
  GrayFrame dst(w, h, std::uint8_t{0}, src.index);
  for (int y = 0; y < h; ++y) {
    const Taps ty = two_thirds_taps(y);
    const std::uint8_t* r0 = src.row(ty.first);
    const std::uint8_t* r1 = src.row(ty.first + 1);
    std::uint8_t* out = dst.row(y);
    for (int x = 0; x < w; ++x) {
      const Taps tx = two_thirds_taps(x);
      const int top = tx.w_first * r0[tx.first] + tx.w_second * r0[tx.first + 1];
      const int bottom = tx.w_first * r1[tx.first] + tx.w_second * r1[tx.first + 1];
      const int sum = ty.w_first * top + ty.w_second * bottom;
      out[x] = static_cast<std::uint8_t>((sum + 4) / 9);
    }
  }
  return dst;
}

ScaleSpacePyramid ScaleSpacePyramid::build(const GrayFrame& frame, int n_octaves) {
  if (n_octaves < 1) {
    throw std::invalid_argument("build_pyramid: n_octaves must be >= 1, got " +
                                std::to_string(n_octaves));
  }
  if (frame.width <= 0 || frame.height <= 0 ||
      frame.data.size() != static_cast<std::size_t>(frame.width) * frame.height) {
    throw std::invalid_argument("build_pyramid: malformed frame");
  }
  // Smallest layer is the last intra-octave: floor(floor(d / 1.5) / 2^(O-1)).
  const int shrink = 1 << (n_octaves - 1);
  if ((2 * frame.width) / 3 / shrink == 0 || (2 * frame.height) / 3 / shrink == 0) {
    throw std::invalid_argument("build_pyramid: frame " + dims(frame.width, frame.height) +
                                " is too small for " + std::to_string(n_octaves) +
                                " octaves");
  }

  ScaleSpacePyramid pyr;
  pyr.n_octaves_ = n_octaves;
  pyr.layers_.reserve(2 * static_cast<std::size_t>(n_octaves));

  GrayFrame octave = frame;
  GrayFrame intra = two_thirds_sample(frame);
  for (int o = 0; o < n_octaves; ++o) {
    const double oct_scale = std::ldexp(1.0, -o);
    if (o > 0) {
      octave = half_sample(octave);
      intra = half_sample(intra);
    }
    pyr.layers_.push_back({octave, oct_scale, LayerKind::Octave, o});
    pyr.layers_.push_back({intra, oct_scale / 1.5, LayerKind::IntraOctave, o});
  }
  return pyr;
}

std::size_t ScaleSpacePyramid::index_of(LayerKind kind, int level) const {
  if (level < 0 || level >= n_octaves_) {
    throw std::out_of_range("pyramid has no " +
                            std::string(kind == LayerKind::Octave ? "octave" : "intra-octave") +
                            " layer " + std::to_string(level) + " (octaves: " +
                            std::to_string(n_octaves_) + ")");
  }
  return 2 * static_cast<std::size_t>(level) + (kind == LayerKind::Octave ? 0 : 1);
}

const GrayFrame& ScaleSpacePyramid::layer_at(LayerKind kind, int level) const {
  return layers_[index_of(kind, level)].image;
}

}  // namespace vidfeat
