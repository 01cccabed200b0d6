#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "vidfeat/features.hpp"
#include "vidfeat/image.hpp"

namespace vidfeat {

// Block-matching propagation parameters. Defaults: GOP length 10, 16x16
// patches, accept below SAD 1800, stop searching below SAD 1000.
struct GopConfig {
  int delta = 10;
  int patch = 16;
  int t_bm = 1800;
  int t_et = 1000;
  int coarse_window = 24;  // side length of the integer search window
  int coarse_step = 2;
  double fine_radius = 1.0;  // sub-pixel offsets in [-r, r] around the coarse winner
  double fine_step = 0.25;

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

struct Offset {
  double dx = 0.0;
  double dy = 0.0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

// Grid offsets {-radius, ..., radius} (multiples of step) in both axes,
// ordered centre first and then ring by ring (Chebyshev distance), each
// ring walked clockwise from its top-left corner.
std::vector<Offset> spiral_offsets(double radius, double step);

// Sum of absolute differences; throws std::invalid_argument on a size mismatch.
long sad_block(const GrayFrame& a, const GrayFrame& b);

// Square patch of `size` pixels whose top-left corner is (x0, y0).
GrayFrame extract_patch(const GrayFrame& frame, int x0, int y0, int size);

struct PatchAnchor {
  int x0 = 0;  // top-left corner in the frame
  int y0 = 0;
};

// Patch centred on the rounded position, shifted to stay inside the frame.
PatchAnchor anchor_for(double x, double y, int size, int width, int height);

struct SearchResult {
  double x0 = 0.0;  // top-left corner of the best match in the current frame
  double y0 = 0.0;
  double sad = 0.0;
  Offset offset;          // displacement relative to the starting anchor
  int visited = 0;        // positions evaluated
  bool early_exit = false;
};

// Two-stage spiral search: integer offsets at coarse_step inside the coarse
// window, then bilinear sub-pixel offsets around the winner. Stops at the first
// position with SAD < t_et. Returns nullopt when the best SAD is not < t_bm or
// no position fits in the frame.
std::optional<SearchResult> spiral_search(const GrayFrame& prev_patch, const GrayFrame& cur_frame,
                                          PatchAnchor start, const GopConfig& cfg);

using FullExtractor = std::function<std::vector<Feature>(const GrayFrame&)>;

struct BaselineStep {
  std::vector<Feature> features;
  bool full_detection = false;
  std::size_t dropped = 0;
};

// GOP start (frame_index % delta == 0): full extraction. Otherwise each
// previous feature is tracked by spiral_search; matches move, keep their
// descriptor and age; unmatched features are dropped.
BaselineStep baseline_step(std::span<const Feature> prev_features, const GrayFrame& prev_frame,
                           const GrayFrame& cur_frame, int frame_index, const GopConfig& cfg,
                           const FullExtractor& full_extract);

}  // namespace vidfeat
