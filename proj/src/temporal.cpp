#include "vidfeat/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

namespace vidfeat {

void GopConfig::validate() const {
  if (delta < 1) throw std::invalid_argument("GOP length must be >= 1");
  if (patch < 2 || patch % 2 != 0) throw std::invalid_argument("patch size must be even and >= 2");
  if (t_bm <= 0 || t_et <= 0) throw std::invalid_argument("SAD thresholds must be positive");
  if (coarse_step < 1 || coarse_window < 0) throw std::invalid_argument("invalid coarse search geometry");
  if (!(fine_step > 0.0) || fine_radius < 0.0) throw std::invalid_argument("invalid fine search geometry");
  if (fine_step > coarse_step) throw std::invalid_argument("fine step must not exceed the coarse step");
}

std::vector<Offset> spiral_offsets(double radius, double step) {
  if (!(step > 0.0) || radius < 0.0) throw std::invalid_argument("spiral_offsets: invalid geometry");
  const int n = static_cast<int>(std::floor(radius / step + 1e-9));
  std::vector<Offset> out;
  out.reserve(static_cast<std::size_t>(2 * n + 1) * (2 * n + 1));
  auto push = [&](int i, int j) { out.push_back({i * step, j * step}); };
  push(0, 0);
  for (int k = 1; k <= n; ++k) {
    for (int i = -k; i <= k; ++i) push(i, -k);
    for (int j = -k + 1; j <= k; ++j) push(k, j);
    for (int i = k - 1; i >= -k; --i) push(i, k);
    for (int j = k - 1; j >= -k + 1; --j) push(-k, j);
  }
  return out;
}

long sad_block(const GrayFrame& a, const GrayFrame& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("sad_block: patch sizes differ (" + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                std::to_string(b.height) + ")");
  }
  long sum = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) sum += std::abs(int{a.data[i]} - int{b.data[i]});
  return sum;
}

GrayFrame extract_patch(const GrayFrame& frame, int x0, int y0, int size) {
  if (x0 < 0 || y0 < 0 || x0 + size > frame.width || y0 + size > frame.height) {
    throw std::invalid_argument("extract_patch: patch outside the frame");
  }
  GrayFrame patch(size, size);
  for (int y = 0; y < size; ++y) std::copy_n(frame.row(y0 + y) + x0, size, patch.row(y));
  return patch;
}

PatchAnchor anchor_for(double x, double y, int size, int width, int height) {
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  return {std::clamp(cx - size / 2, 0, std::max(width - size, 0)),
          std::clamp(cy - size / 2, 0, std::max(height - size, 0))};
}

namespace {

// Integer SAD with partial-sum abort once `bound` is reached.
long sad_at(const GrayFrame& patch, const GrayFrame& frame, int x0, int y0, long bound) {
  const int n = patch.width;
  long sum = 0;
  for (int y = 0; y < n; ++y) {
    const std::uint8_t* a = patch.row(y);
    const std::uint8_t* b = frame.row(y0 + y) + x0;
    for (int x = 0; x < n; ++x) sum += std::abs(int{a[x]} - int{b[x]});
    if (sum >= bound) return sum;
  }
  return sum;
}

double sad_bilinear(const GrayFrame& patch, const GrayFrame& frame, double x0, double y0, double bound) {
  const int n = patch.width;
  const int ix = static_cast<int>(std::floor(x0));
  const int iy = static_cast<int>(std::floor(y0));
  const double ax = x0 - ix;
  const double ay = y0 - iy;
  const double w00 = (1.0 - ax) * (1.0 - ay);
  const double w10 = ax * (1.0 - ay);
  const double w01 = (1.0 - ax) * ay;
  const double w11 = ax * ay;
  const int x_last = frame.width - 1;
  const int y_last = frame.height - 1;
  double sum = 0.0;
  for (int y = 0; y < n; ++y) {
    const std::uint8_t* a = patch.row(y);
    const std::uint8_t* r0 = frame.row(iy + y);
    const std::uint8_t* r1 = frame.row(std::min(iy + y + 1, y_last));
    for (int x = 0; x < n; ++x) {
      const int c0 = ix + x;
      const int c1 = std::min(c0 + 1, x_last);
      const double v = w00 * r0[c0] + w10 * r0[c1] + w01 * r1[c0] + w11 * r1[c1];
      sum += std::abs(a[x] - v);
    }
    if (sum >= bound) return sum;
  }
  return sum;
}

}  // namespace

std::optional<SearchResult> spiral_search(const GrayFrame& prev_patch, const GrayFrame& cur_frame,
                                          PatchAnchor start, const GopConfig& cfg) {
  const int n = prev_patch.width;
  if (prev_patch.height != n) throw std::invalid_argument("spiral_search: patch must be square");
  const int max_x = cur_frame.width - n;
  const int max_y = cur_frame.height - n;
  if (max_x < 0 || max_y < 0) return std::nullopt;

  SearchResult best;
  best.sad = std::numeric_limits<double>::infinity();
  bool found = false;

  const auto coarse = spiral_offsets(cfg.coarse_window / 2.0, cfg.coarse_step);
  for (const Offset& o : coarse) {
    const int x0 = start.x0 + static_cast<int>(o.dx);
    const int y0 = start.y0 + static_cast<int>(o.dy);
    if (x0 < 0 || y0 < 0 || x0 > max_x || y0 > max_y) continue;
    ++best.visited;
    const long bound = found ? static_cast<long>(best.sad) : std::numeric_limits<long>::max();
    const long sad = sad_at(prev_patch, cur_frame, x0, y0, bound);
    if (sad < best.sad) {
      best.sad = static_cast<double>(sad);
      best.x0 = x0;
      best.y0 = y0;
      found = true;
    }
    if (sad < cfg.t_et) {
      best.early_exit = true;
      break;
    }
  }
  if (!found) return std::nullopt;

  if (!best.early_exit) {
    const double cx = best.x0;
    const double cy = best.y0;
    for (const Offset& o : spiral_offsets(cfg.fine_radius, cfg.fine_step)) {
      if (o.dx == 0.0 && o.dy == 0.0) continue;
      const double x0 = cx + o.dx;
      const double y0 = cy + o.dy;
      if (x0 < 0.0 || y0 < 0.0 || x0 > max_x || y0 > max_y) continue;
      ++best.visited;
      const double sad = sad_bilinear(prev_patch, cur_frame, x0, y0, best.sad);
      if (sad < best.sad) {
        best.sad = sad;
        best.x0 = x0;
        best.y0 = y0;
      }
      if (sad < cfg.t_et) {
        best.early_exit = true;
        break;
      }
    }
  }

  if (!(best.sad < cfg.t_bm)) return std::nullopt;
  best.offset = {best.x0 - start.x0, best.y0 - start.y0};
  return best;
}

BaselineStep baseline_step(std::span<const Feature> prev_features, const GrayFrame& prev_frame,
                           const GrayFrame& cur_frame, int frame_index, const GopConfig& cfg,
                           const FullExtractor& full_extract) {
  cfg.validate();
  BaselineStep step;
  if (frame_index % cfg.delta == 0) {
    step.features = full_extract(cur_frame);
    step.full_detection = true;
    return step;
  }
  if (prev_frame.width != cur_frame.width || prev_frame.height != cur_frame.height) {
    throw std::invalid_argument("baseline_step: frame dimensions differ");
  }
  if (cfg.patch > cur_frame.width || cfg.patch > cur_frame.height) {
    step.dropped = prev_features.size();
    return step;
  }
  step.features.reserve(prev_features.size());
  for (const Feature& f : prev_features) {
    const PatchAnchor anchor = anchor_for(f.kp.x, f.kp.y, cfg.patch, prev_frame.width, prev_frame.height);
    const GrayFrame patch = extract_patch(prev_frame, anchor.x0, anchor.y0, cfg.patch);
    const auto match = spiral_search(patch, cur_frame, anchor, cfg);
    if (!match) {
      ++step.dropped;
      continue;
    }
    Feature moved = f;
    moved.kp.x = std::clamp(f.kp.x + match->offset.dx, 0.0, std::nextafter(static_cast<double>(cur_frame.width), 0.0));
    moved.kp.y = std::clamp(f.kp.y + match->offset.dy, 0.0, std::nextafter(static_cast<double>(cur_frame.height), 0.0));
    moved.origin = Origin::Propagated;
    moved.age = f.age + 1;
    step.features.push_back(moved);
  }
  return step;
}

}  // namespace vidfeat
