#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vidfeat/evaluation.hpp"
#include "vidfeat/image.hpp"
#include "vidfeat/matching.hpp"

namespace vidfeat {

// Deterministic random-rectangle texture; rectangle sides lie in [3, max_side].
GrayFrame random_texture(int width, int height, std::uint64_t seed, int max_side = 48);

struct SynthObject {
  int id = 0;
  int width = 64;
  int height = 64;
  std::uint64_t texture_seed = 1;
  int texture_scale = 48;  // largest rectangle side of the texture
  double x = 0.0;  // top-left corner at first_frame
  double y = 0.0;
  double vx = 0.0;  // pixels per frame
  double vy = 0.0;
  int first_frame = 0;
  int last_frame = -1;  // inclusive; negative: until the end

  bool visible(int frame) const { return frame >= first_frame && (last_frame < 0 || frame <= last_frame); }
  Point2 position(int frame) const;
  Point2 centroid(int frame) const;
};

struct SceneSpec {
  int width = 640;
  int height = 480;
  int n_frames = 10;
  std::uint64_t seed = 1;  // background texture
  bool textured_background = true;
  int texture_scale = 48;
  std::vector<SynthObject> objects;  // painted in order
};

struct SynthSequence {
  std::vector<GrayFrame> frames;
  GroundTruth truth;  // one record per visible object per frame
};

// Throws std::invalid_argument for dims below 64x64, a non-positive frame
// count or an object larger than the frame.
SynthSequence synth_sequence(const SceneSpec& spec);

struct ObjectReference {
  GrayFrame image;
  std::array<Point2, 4> corners{};  // object corners inside `image`
};

// Named scenes: "static" (background only), "moving" (one object covering a
// quarter of the frame drifting by (1.5, 1.0) px per frame) and "multi"
// (three objects, each shown for a third of the sequence). Throws
// std::invalid_argument for an unknown name.
SceneSpec preset_scene(const std::string& name, int width, int height, int n_frames, std::uint64_t seed);

// The object texture on a uniform canvas with `margin` pixels on each side.
ObjectReference object_reference(const SynthObject& obj, int margin = 16);

}  // namespace vidfeat
