#include "vidfeat/matching.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace vidfeat {

Homography::Homography(const Eigen::Matrix3d& h) : h_(h) {
  if (std::abs(h_(2, 2)) > 1e-12) h_ /= h_(2, 2);
}

std::optional<Point2> Homography::apply(Point2 p) const {
  const Eigen::Vector3d q = h_ * Eigen::Vector3d(p.x, p.y, 1.0);
  if (std::abs(q.z()) < 1e-12) return std::nullopt;
  return Point2{q.x() / q.z(), q.y() / q.z()};
}

double Homography::condition() const {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(h_);
  const auto& s = svd.singularValues();
  if (s(2) <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(2);
}

std::vector<Match> radius_match(std::span<const Feature> query, std::span<const Feature> reference,
                                int threshold) {
  std::vector<Match> out;
  for (std::size_t q = 0; q < query.size(); ++q) {
    for (std::size_t r = 0; r < reference.size(); ++r) {
      const int d = hamming(query[q].desc, reference[r].desc);
      if (d <= threshold) out.push_back({static_cast<int>(q), static_cast<int>(r), d});
    }
  }
  return out;
}

std::vector<Point2> positions(std::span<const Feature> features) {
  std::vector<Point2> out;
  out.reserve(features.size());
  for (const Feature& f : features) out.push_back({f.kp.x, f.kp.y});
  return out;
}

namespace {

constexpr double kMaxCondition = 1e12;

// Similarity moving the centroid to the origin with mean distance sqrt(2).
std::optional<Eigen::Matrix3d> normaliser(std::span<const Point2> pts) {
  double cx = 0.0, cy = 0.0;
  for (const Point2& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const Point2& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 1e-12)) return std::nullopt;
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0;
  return t;
}

bool collinear(const Point2& a, const Point2& b, const Point2& c) {
  const double ux = b.x - a.x, uy = b.y - a.y;
  const double vx = c.x - a.x, vy = c.y - a.y;
  const double cross = std::abs(ux * vy - uy * vx);
  return cross <= 1e-6 * std::hypot(ux, uy) * std::hypot(vx, vy) + 1e-12;
}

bool degenerate_sample(const std::array<Point2, 4>& p) {
  return collinear(p[0], p[1], p[2]) || collinear(p[0], p[1], p[3]) || collinear(p[0], p[2], p[3]) ||
         collinear(p[1], p[2], p[3]);
}

double reprojection_sq(const Homography& h, const Point2& ref, const Point2& query) {
  const auto p = h.apply(ref);
  if (!p) return std::numeric_limits<double>::infinity();
  const double dx = p->x - query.x;
  const double dy = p->y - query.y;
  return dx * dx + dy * dy;
}

// Chum & Matas progressive sampling schedule over matches sorted by quality.
class ProsacSampler {
 public:
  ProsacSampler(std::size_t n_matches, std::mt19937_64& rng) : big_n_(n_matches), rng_(rng) {
    t_n_ = kGrowthMax;
    for (std::size_t i = 0; i < kSample; ++i) {
      t_n_ *= static_cast<double>(n_ - i) / static_cast<double>(big_n_ - i);
    }
  }

  // Indices into the sorted order.
  std::array<std::size_t, 4> next() {
    ++t_;
    if (t_ > t_n_prime_ && n_ < big_n_) {
      const double t_next = t_n_ * static_cast<double>(n_ + 1) / static_cast<double>(n_ + 1 - kSample);
      t_n_prime_ += static_cast<std::size_t>(std::ceil(t_next - t_n_));
      t_n_ = t_next;
      ++n_;
    }
    std::array<std::size_t, 4> idx{};
    // Until the schedule catches up, the newest match is always part of the sample.
    const bool include_last = t_n_prime_ >= t_ && n_ > kSample;
    const std::size_t pool = include_last ? n_ - 1 : n_;
    const std::size_t draw = include_last ? kSample - 1 : kSample;
    for (std::size_t k = 0; k < draw; ++k) {
      bool fresh = false;
      while (!fresh) {
        idx[k] = static_cast<std::size_t>(rng_() % pool);
        fresh = std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx[k]) ==
                idx.begin() + static_cast<std::ptrdiff_t>(k);
      }
    }
    if (include_last) idx[kSample - 1] = n_ - 1;
    return idx;
  }

 private:
  static constexpr std::size_t kSample = 4;
  static constexpr double kGrowthMax = 200000.0;
  std::size_t big_n_;
  std::mt19937_64& rng_;
  std::size_t n_ = kSample;
  std::size_t t_ = 0;
  std::size_t t_n_prime_ = 1;
  double t_n_ = 0.0;
};

}  // namespace

std::optional<Homography> fit_homography(std::span<const Point2> ref, std::span<const Point2> query) {
  if (ref.size() != query.size() || ref.size() < 4) return std::nullopt;
  const auto tr = normaliser(ref);
  const auto tq = normaliser(query);
  if (!tr || !tq) return std::nullopt;

  Eigen::Matrix<double, 9, 9> ata = Eigen::Matrix<double, 9, 9>::Zero();
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const Eigen::Vector3d r = *tr * Eigen::Vector3d(ref[i].x, ref[i].y, 1.0);
    const Eigen::Vector3d q = *tq * Eigen::Vector3d(query[i].x, query[i].y, 1.0);
    Eigen::Matrix<double, 9, 1> a1, a2;
    a1 << -r.x(), -r.y(), -1.0, 0.0, 0.0, 0.0, q.x() * r.x(), q.x() * r.y(), q.x();
    a2 << 0.0, 0.0, 0.0, -r.x(), -r.y(), -1.0, q.y() * r.x(), q.y() * r.y(), q.y();
    ata.noalias() += a1 * a1.transpose();
    ata.noalias() += a2 * a2.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(ata);
  if (eig.info() != Eigen::Success) return std::nullopt;
  const auto& ev = eig.eigenvalues();  // ascending
  // A one-dimensional null space is required: the second-smallest eigenvalue must not vanish.
  if (!(ev(1) > 1e-12 * ev(8))) return std::nullopt;
  const Eigen::Matrix<double, 9, 1> v = eig.eigenvectors().col(0);
  Eigen::Matrix3d hn;
  hn << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  const Eigen::Matrix3d h = tq->inverse() * hn * *tr;
  if (!h.allFinite()) return std::nullopt;
  Homography out(h);
  if (!(out.condition() < kMaxCondition)) return std::nullopt;
  return out;
}

RansacResult ransac_homography(std::span<const Match> matches, std::span<const Point2> query_pts,
                               std::span<const Point2> ref_pts, const RansacConfig& cfg) {
  RansacResult result;
  const std::size_t m = matches.size();
  if (m < 4) return result;

  const double tol_sq = cfg.reproj_tol * cfg.reproj_tol;
  auto inliers_of = [&](const Homography& h) {
    std::vector<int> in;
    for (std::size_t i = 0; i < m; ++i) {
      const Match& mt = matches[i];
      if (reprojection_sq(h, ref_pts[static_cast<std::size_t>(mt.ref_idx)],
                          query_pts[static_cast<std::size_t>(mt.query_idx)]) < tol_sq) {
        in.push_back(static_cast<int>(i));
      }
    }
    return in;
  };

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  if (cfg.sampling == RansacSampling::Progressive) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return matches[a].distance < matches[b].distance; });
  }
  ProsacSampler prosac(m, rng);

  std::optional<Homography> best;
  std::vector<int> best_inliers;
  std::array<std::size_t, 4> idx{};
  std::array<Point2, 4> r{};
  std::array<Point2, 4> q{};
  for (int it = 0; it < cfg.iterations; ++it) {
    if (cfg.sampling == RansacSampling::Progressive) {
      idx = prosac.next();
    } else {
      for (std::size_t k = 0; k < 4; ++k) {
        bool fresh = false;
        while (!fresh) {
          idx[k] = static_cast<std::size_t>(rng() % m);
          fresh = std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx[k]) ==
                  idx.begin() + static_cast<std::ptrdiff_t>(k);
        }
      }
    }
    for (std::size_t k = 0; k < 4; ++k) {
      const Match& mt = matches[order[idx[k]]];
      r[k] = ref_pts[static_cast<std::size_t>(mt.ref_idx)];
      q[k] = query_pts[static_cast<std::size_t>(mt.query_idx)];
    }
    if (degenerate_sample(r) || degenerate_sample(q)) continue;
    const auto h = fit_homography(r, q);
    if (!h) continue;
    auto in = inliers_of(*h);
    if (in.size() > best_inliers.size()) {
      best = h;
      best_inliers = std::move(in);
    }
  }
  if (!best || best_inliers.size() < 4) return result;

  // Refit on the consensus set while it keeps growing (or holds steady).
  for (int round = 0; round < 3; ++round) {
    std::vector<Point2> rs, qs;
    rs.reserve(best_inliers.size());
    qs.reserve(best_inliers.size());
    for (int i : best_inliers) {
      rs.push_back(ref_pts[static_cast<std::size_t>(matches[static_cast<std::size_t>(i)].ref_idx)]);
      qs.push_back(query_pts[static_cast<std::size_t>(matches[static_cast<std::size_t>(i)].query_idx)]);
    }
    const auto refit = fit_homography(rs, qs);
    if (!refit) break;
    auto in = inliers_of(*refit);
    if (in.size() < best_inliers.size()) break;
    const bool same = in == best_inliers;
    best = refit;
    best_inliers = std::move(in);
    if (same) break;
  }

  result.model = best;
  result.inliers = std::move(best_inliers);
  return result;
}

PairVerification verify_pair(std::span<const Feature> query, std::span<const Feature> reference,
                             int match_threshold, const RansacConfig& cfg) {
  PairVerification v;
  v.matches = radius_match(query, reference, match_threshold);
  const auto qp = positions(query);
  const auto rp = positions(reference);
  v.ransac = ransac_homography(v.matches, qp, rp, cfg);
  return v;
}

int count_mpr(std::span<const Feature> query, std::span<const Feature> reference, int match_threshold,
              const RansacConfig& cfg) {
  return verify_pair(query, reference, match_threshold, cfg).mpr();
}

}  // namespace vidfeat
