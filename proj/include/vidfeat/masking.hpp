#pragma once

#include <span>
#include <string>
#include <vector>

#include "vidfeat/detection_mask.hpp"
#include "vidfeat/features.hpp"
#include "vidfeat/image.hpp"

namespace vidfeat {

enum class MaskMode { None, Intensity, Binning, Temporal };

MaskMode parse_mask_mode(const std::string& name);
const char* to_string(MaskMode mode);

struct MaskConfig {
  MaskMode mode = MaskMode::None;
  int intensity_threshold = 20;  // T_I
  int histogram_threshold = 1;   // T_H
  int grid_rows = 16;            // N_r
  int grid_cols = 16;            // N_c
  // Octave whose layers are differenced; negative selects the top octave.
  int mask_octave = -1;
  // Per-layer intensity masks (each octave/intra-octave gated by the mask of
  // its own octave) instead of one mask for every layer.
  bool per_layer = false;
  // Test hook: gate with an all-ones mask after the first frame.
  bool force_full = false;
};

// Cell (k, l) = 1 iff |cur(k, l) - prev(k, l)| > threshold. The cell size is
// ceil(frame / layer) along each axis. Throws std::invalid_argument on a
// dimension mismatch or negative threshold.
SubsampledMask intensity_diff_mask(const GrayFrame& prev_layer, const GrayFrame& cur_layer,
                                   int threshold, int frame_width, int frame_height);

struct BinGrid {
  int rows = 16;
  int cols = 16;
  int bin_w = 1;  // S_x = ceil(N_x / cols)
  int bin_h = 1;  // S_y = ceil(N_y / rows)

  // Throws std::invalid_argument for grids smaller than 1x1 or empty frames.
  static BinGrid for_frame(int frame_width, int frame_height, int rows, int cols);
};

struct KeypointHistogram {
  BinGrid grid;
  std::vector<int> counts;  // row-major, rows x cols
  std::size_t clamped = 0;  // features outside the frame, counted in the nearest edge bin

  int at(int k, int l) const { return counts[static_cast<std::size_t>(l) * grid.cols + k]; }
};

KeypointHistogram keypoint_histogram(std::span<const Feature> features, int frame_width, int frame_height,
                                     int rows, int cols);

struct BinningMask {
  SubsampledMask mask;
  std::size_t clamped = 0;
};

// Bin (k, l) = 1 iff at least `threshold` previous features fall into it.
BinningMask keypoint_binning_mask(std::span<const Feature> prev_features, int frame_width,
                                  int frame_height, int rows, int cols, int threshold);

// Block replication onto a width x height grid. Throws std::invalid_argument
// when the cells do not cover the target.
DetectionMask upsample_mask(const SubsampledMask& m, int width, int height);

// Detected features where the mask is 1, followed by previous features where
// it is 0 (propagated: geometry and descriptor unchanged, age + 1).
std::vector<Feature> merge_features(std::span<const Feature> detected, std::span<const Feature> prev,
                                    const DetectionMask& mask);

// Octave a keypoint of scale sigma belongs to: floor(log2(sigma)), clamped.
int octave_for_sigma(double sigma, int n_octaves);

// Per-octave variant of merge_features: each feature is tested against the
// mask of its own octave.
std::vector<Feature> merge_features(std::span<const Feature> detected, std::span<const Feature> prev,
                                    std::span<const DetectionMask> octave_masks);

}  // namespace vidfeat
