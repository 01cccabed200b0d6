#include "vidfeat/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace vidfeat {

FrameDivergence compare_keypoints(std::span<const Feature> masked, std::span<const Feature> full,
                                  const DivergenceConfig& cfg) {
  // Masked features sorted by x so candidates come from a narrow window.
  std::vector<std::size_t> by_x(masked.size());
  for (std::size_t i = 0; i < by_x.size(); ++i) by_x[i] = i;
  std::sort(by_x.begin(), by_x.end(), [&](std::size_t a, std::size_t b) { return masked[a].kp.x < masked[b].kp.x; });

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;  // (distance, full, masked)
  for (std::size_t f = 0; f < full.size(); ++f) {
    const Keypoint& kf = full[f].kp;
    auto lo = std::lower_bound(by_x.begin(), by_x.end(), kf.x - cfg.position_tol,
                               [&](std::size_t i, double x) { return masked[i].kp.x < x; });
    for (auto it = lo; it != by_x.end() && masked[*it].kp.x <= kf.x + cfg.position_tol; ++it) {
      const Keypoint& km = masked[*it].kp;
      const double d = std::hypot(km.x - kf.x, km.y - kf.y);
      if (d > cfg.position_tol) continue;
      const double ratio = std::max(km.sigma, kf.sigma) / std::min(km.sigma, kf.sigma);
      if (!(ratio <= cfg.scale_ratio)) continue;
      pairs.emplace_back(d, f, *it);
    }
  }
  std::sort(pairs.begin(), pairs.end());

  std::vector<bool> full_used(full.size(), false);
  std::vector<bool> masked_used(masked.size(), false);
  FrameDivergence out;
  for (const auto& [d, f, m] : pairs) {
    if (full_used[f] || masked_used[m]) continue;
    full_used[f] = masked_used[m] = true;
    ++out.common;
  }
  for (std::size_t f = 0; f < full.size(); ++f) {
    if (!full_used[f]) out.only_full_at.push_back({full[f].kp.x, full[f].kp.y});
  }
  for (std::size_t m = 0; m < masked.size(); ++m) {
    if (!masked_used[m]) out.only_masked_at.push_back({masked[m].kp.x, masked[m].kp.y});
  }
  out.only_full = out.only_full_at.size();
  out.only_masked = out.only_masked_at.size();
  return out;
}

std::vector<FrameDivergence> divergence_report(std::span<const GrayFrame> frames, const PipelineConfig& cfg,
                                               const DivergenceConfig& dcfg) {
  if (frames.empty()) return {};
  PipelineConfig full_cfg = cfg;
  full_cfg.mask.mode = MaskMode::None;
  full_cfg.mask.force_full = false;
  FrameExtractor masked(cfg);
  FrameExtractor full(full_cfg);
  std::vector<FrameDivergence> out;
  out.reserve(frames.size());
  for (const GrayFrame& frame : frames) {
    const FrameReport r = masked.process(frame);
    full.process(frame);
    FrameDivergence d = compare_keypoints(masked.features(), full.features(), dcfg);
    d.frame = r.frame;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace vidfeat
