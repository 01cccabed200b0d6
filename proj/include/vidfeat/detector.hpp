#pragma once

#include <span>
#include <vector>

#include "vidfeat/detection_mask.hpp"
#include "vidfeat/features.hpp"
#include "vidfeat/image.hpp"
#include "vidfeat/pyramid.hpp"

namespace vidfeat {

inline constexpr int kDefaultArcLength = 9;
inline constexpr int kDefaultThreshold = 55;
inline constexpr int kRetrievalThreshold = 70;
inline constexpr int kCircleRadius = 3;

// Pixel offsets of the 16-pixel radius-3 Bresenham circle, clockwise from 12 o'clock.
inline constexpr int kCircleDx[16] = {0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1};
inline constexpr int kCircleDy[16] = {-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3};

struct Candidate {
  int x = 0;
  int y = 0;
  int layer = 0;  // index into ScaleSpacePyramid::layers()
  int score = 0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Largest t such that arc_len contiguous circle pixels are all > I_p + t or
// all < I_p - t; 0 when no t >= 1 qualifies. Throws std::invalid_argument if
// (x, y) is within 3 pixels of the border or arc_len is outside [1, 16].
int ast_corner_score(const GrayFrame& layer, int x, int y, int arc_len = kDefaultArcLength);

struct LayerGating {
  const DetectionMask* mask = nullptr;  // null: no gating
  double scale = 1.0;                   // layer scale used to map into mask coordinates
};

// Every pixel with score >= threshold whose mapped mask entry is 1, in
// row-major order.
std::vector<Candidate> detect_candidates(const GrayFrame& layer, int threshold,
                                         LayerGating gating = {}, int layer_index = 0,
                                         int arc_len = kDefaultArcLength);

// 3x3 scale-space non-maxima suppression followed by sub-pixel and sub-scale
// refinement. per_layer[i] holds the candidates of pyramid.layer(i).
std::vector<Keypoint> nms_and_refine(std::span<const std::vector<Candidate>> per_layer,
                                     const ScaleSpacePyramid& pyramid);

struct QuadraticPeak {
  double dx = 0.0;
  double dy = 0.0;
  double value = 0.0;
  bool valid = false;  // false: non-negative curvature or vertex outside the patch
};

// Least-squares fit of a 2D quadratic to a 3x3 patch (row-major, centre at
// index 4) and its vertex. Offsets are in (-1, 1) when valid.
QuadraticPeak fit_quadratic_3x3(std::span<const double, 9> patch);

struct DetectorConfig {
  int threshold = kDefaultThreshold;
  int arc_len = kDefaultArcLength;
  int threads = 1;
};

// Candidates on every pyramid layer (optionally gated), then NMS and refinement.
std::vector<Keypoint> detect_keypoints(const ScaleSpacePyramid& pyramid, const DetectorConfig& cfg,
                                       const DetectionMask* mask = nullptr);

// One gate per pyramid layer (entries may be null).
std::vector<Keypoint> detect_keypoints(const ScaleSpacePyramid& pyramid, const DetectorConfig& cfg,
                                       std::span<const DetectionMask* const> layer_masks);

}  // namespace vidfeat
