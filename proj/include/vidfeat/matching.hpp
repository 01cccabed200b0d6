#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vidfeat/features.hpp"

namespace vidfeat {

// floor(0.18 * 512)
inline constexpr int kDefaultMatchThreshold = 102;

struct Match {
  int query_idx = 0;
  int ref_idx = 0;
  int distance = 0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Projective map taking reference points to query points, normalised so that
// H(2,2) = 1 whenever that entry is non-zero.
class Homography {
 public:
  Homography() : h_(Eigen::Matrix3d::Identity()) {}
  explicit Homography(const Eigen::Matrix3d& h);

  const Eigen::Matrix3d& matrix() const { return h_; }

  // nullopt when the point maps to infinity.
  std::optional<Point2> apply(Point2 p) const;

  // Ratio of extreme singular values.
  double condition() const;

 private:
  Eigen::Matrix3d h_;
};

// All pairs with Hamming distance <= threshold, ordered by query then reference.
std::vector<Match> radius_match(std::span<const Feature> query, std::span<const Feature> reference,
                                int threshold = kDefaultMatchThreshold);

enum class RansacSampling {
  Uniform,      // minimal samples drawn uniformly from all matches
  Progressive,  // PROSAC: samples drawn from a growing prefix of matches sorted by Hamming distance
};

struct RansacConfig {
  int iterations = 1000;
  RansacSampling sampling = RansacSampling::Progressive;
  double reproj_tol = 3.0;  // pixels; inliers have error strictly below
  std::uint64_t seed = 42;
};

struct RansacResult {
  std::optional<Homography> model;  // empty on degenerate input
  std::vector<int> inliers;         // indices into the match list

  bool degenerate() const { return !model.has_value(); }
};

// Normalised DLT over >= 4 correspondences (ref -> query). nullopt when the
// system is rank-deficient or the result is not invertible.
std::optional<Homography> fit_homography(std::span<const Point2> ref, std::span<const Point2> query);

RansacResult ransac_homography(std::span<const Match> matches, std::span<const Point2> query_pts,
                               std::span<const Point2> ref_pts, const RansacConfig& cfg = {});

std::vector<Point2> positions(std::span<const Feature> features);

struct PairVerification {
  std::vector<Match> matches;
  RansacResult ransac;

  int mpr() const { return ransac.degenerate() ? 0 : static_cast<int>(ransac.inliers.size()); }
};

PairVerification verify_pair(std::span<const Feature> query, std::span<const Feature> reference,
                             int match_threshold = kDefaultMatchThreshold, const RansacConfig& cfg = {});

// Matches post RANSAC: inlier count, 0 when degenerate.
int count_mpr(std::span<const Feature> query, std::span<const Feature> reference,
              int match_threshold = kDefaultMatchThreshold, const RansacConfig& cfg = {});

}  // namespace vidfeat
