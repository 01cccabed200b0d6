#pragma once

#include <span>
#include <vector>

#include "vidfeat/image.hpp"

namespace vidfeat {

enum class LayerKind { Octave, IntraOctave };

struct PyramidLayer {
  GrayFrame image;
  double scale = 1.0;  // layer pixels per original pixel
  LayerKind kind = LayerKind::Octave;
  int level = 0;

  // Original-frame coordinate of a layer pixel centre, and back.
  double to_frame(double layer_coord) const { return (layer_coord + 0.5) / scale - 0.5; }
  double to_layer(double frame_coord) const { return (frame_coord + 0.5) * scale - 0.5; }
};

// Octaves at scale 2^-o and intra-octaves at 2^-o / 1.5, stored interleaved
// (o0, i0, o1, i1, ...) so that scale strictly decreases with the layer index.
class ScaleSpacePyramid {
 public:
  ScaleSpacePyramid() = default;

  // Throws std::invalid_argument when n_octaves < 1 or any layer would
  // reach zero width or height.
  static ScaleSpacePyramid build(const GrayFrame& frame, int n_octaves);

  int n_octaves() const { return n_octaves_; }
  std::span<const PyramidLayer> layers() const { return layers_; }
  const PyramidLayer& layer(std::size_t i) const { return layers_.at(i); }
  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }

  // Throws std::out_of_range for a missing layer.
  const GrayFrame& layer_at(LayerKind kind, int level) const;
  std::size_t index_of(LayerKind kind, int level) const;

  // Lowest-resolution octave.
  const GrayFrame& top_octave() const { return layer_at(LayerKind::Octave, n_octaves_ - 1); }

 private:
  std::vector<PyramidLayer> layers_;
  int n_octaves_ = 0;
};

inline ScaleSpacePyramid build_pyramid(const GrayFrame& frame, int n_octaves) {
  return ScaleSpacePyramid::build(frame, n_octaves);
}

// 2x2 box average, dimensions floor(w/2) x floor(h/2).
GrayFrame half_sample(const GrayFrame& src);

// Area-weighted 1.5x reduction; each 3x3 source block becomes a 2x2 block.
// Dimensions floor(w/1.5) x floor(h/1.5).
GrayFrame two_thirds_sample(const GrayFrame& src);

}  // namespace vidfeat
