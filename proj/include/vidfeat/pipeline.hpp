#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "vidfeat/descriptor.hpp"
#include "vidfeat/detection_mask.hpp"
#include "vidfeat/detector.hpp"
#include "vidfeat/features.hpp"
#include "vidfeat/image.hpp"
#include "vidfeat/masking.hpp"
#include "vidfeat/matching.hpp"
#include "vidfeat/pyramid.hpp"
#include "vidfeat/temporal.hpp"

namespace vidfeat {

struct PipelineConfig {
  DetectorConfig detector;
  int n_octaves = 4;
  MaskConfig mask;
  GopConfig gop;
  int match_threshold = kDefaultMatchThreshold;
  RansacConfig ransac;
  std::uint64_t seed = 42;
  bool rotation_invariant = true;
  // > 1 parallelises detection and description inside a frame.
  int threads = 1;

  // Throws std::invalid_argument for out-of-range settings.
  void validate() const;
};

struct FrameReport {
  int frame = 0;
  std::size_t n_detected = 0;
  std::size_t n_propagated = 0;
  std::size_t n_total = 0;
  std::size_t n_dropped = 0;  // features lost by the footprint rule or failed block matches
  double coverage = 1.0;
  double t_pyramid_ms = 0.0;  // process CPU time per stage
  double t_mask_ms = 0.0;
  double t_detect_ms = 0.0;   // block-matching search time in temporal mode
  double t_describe_ms = 0.0;
  double t_total_ms = 0.0;
  double wall_ms = 0.0;
  std::optional<double> accuracy;
};

// Process CPU time in milliseconds.
double cpu_time_ms();
// Monotonic wall clock in milliseconds.
double wall_time_ms();

// Full detection and description of one frame, no gating.
std::vector<Feature> extract_features(const GrayFrame& frame, const PipelineConfig& cfg);

// Stateful per-sequence extractor. Frame 0 is always fully detected; later
// frames follow cfg.mask.mode.
class FrameExtractor {
 public:
  explicit FrameExtractor(PipelineConfig cfg);

  FrameReport process(const GrayFrame& frame);

  const std::vector<Feature>& features() const { return features_; }
  // Full-resolution mask used for the last frame; empty when ungated.
  const std::vector<DetectionMask>& masks() const { return masks_; }
  int frames_processed() const { return n_; }
  const PipelineConfig& config() const { return cfg_; }

 private:
  void run_gated(const GrayFrame& frame, FrameReport& r);
  void run_temporal(const GrayFrame& frame, FrameReport& r);
  void run_full(const GrayFrame& frame, ScaleSpacePyramid pyr, FrameReport& r);

  PipelineConfig cfg_;
  int n_ = 0;
  GrayFrame prev_frame_;
  ScaleSpacePyramid prev_pyr_;
  std::vector<Feature> features_;
  std::vector<DetectionMask> masks_;
};

struct PipelineResult {
  std::vector<std::vector<Feature>> features;  // per frame
  std::vector<FrameReport> reports;
};

// Called after each frame with its index, features and report (mutable so
// callers can attach accuracy).
using FrameObserver = std::function<void(int, const std::vector<Feature>&, FrameReport&)>;

// Throws std::invalid_argument for an empty sequence.
PipelineResult run_pipeline(std::span<const GrayFrame> frames, const PipelineConfig& cfg,
                            const FrameObserver& observer = {}, bool keep_features = true);

}  // namespace vidfeat
