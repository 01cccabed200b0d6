#pragma once

#include <span>
#include <vector>

#include "vidfeat/features.hpp"
#include "vidfeat/image.hpp"
#include "vidfeat/matching.hpp"
#include "vidfeat/pipeline.hpp"

namespace vidfeat {

struct DivergenceConfig {
  double position_tol = 1.0;  // pixels
  double scale_ratio = 1.2;   // max(s1, s2) / min(s1, s2)
};

struct FrameDivergence {
  int frame = 0;
  std::size_t only_masked = 0;
  std::size_t only_full = 0;
  std::size_t common = 0;
  std::vector<Point2> only_masked_at;
  std::vector<Point2> only_full_at;

  // common / |full|; 1 when full detection found nothing.
  double preserved() const {
    const std::size_t full = common + only_full;
    return full == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(full);
  }
  bool identical() const { return only_masked == 0 && only_full == 0; }
};

// One-to-one greedy pairing (closest pairs first) of keypoints that agree in
// position and scale.
FrameDivergence compare_keypoints(std::span<const Feature> masked, std::span<const Feature> full,
                                  const DivergenceConfig& cfg = {});

// Runs `cfg` and the same configuration in mode none side by side.
std::vector<FrameDivergence> divergence_report(std::span<const GrayFrame> frames, const PipelineConfig& cfg,
                                               const DivergenceConfig& dcfg = {});

}  // namespace vidfeat
