#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "test_support.hpp"
#include "vidfeat/matching.hpp"

using namespace vidfeat;

namespace {

Feature with_desc(const BinaryDescriptor& d, double x = 0.0, double y = 0.0) {
  Feature f = fixtures::feature_at(x, y);
  f.desc = d;
  return f;
}

BinaryDescriptor flip_first(const BinaryDescriptor& d, int n) {
  BinaryDescriptor out = d;
  for (int b = 0; b < n; ++b) out.set(b, !d.test(b));
  return out;
}

}  // namespace

TEST(Matching, RadiusThresholdIsInclusive) {
  std::mt19937_64 rng(1);
  const auto base = fixtures::random_descriptor(rng);
  const std::vector<Feature> ref{with_desc(base)};
  const std::vector<Feature> q{with_desc(flip_first(base, 102)), with_desc(flip_first(base, 103)),
                               with_desc(base)};
  const auto m = radius_match(q, ref);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0], (Match{0, 0, 102}));
  EXPECT_EQ(m[1], (Match{2, 0, 0}));
  EXPECT_EQ(kDefaultMatchThreshold, 102);
}

TEST(Matching, RadiusMatchIsSymmetricAndComplete) {
  std::mt19937_64 rng(2);
  std::vector<Feature> a, b;
  for (int i = 0; i < 40; ++i) a.push_back(with_desc(fixtures::random_descriptor(rng)));
  for (int i = 0; i < 30; ++i) b.push_back(with_desc(flip_first(a[static_cast<std::size_t>(i)].desc, i * 4)));
  const auto ab = radius_match(a, b);
  const auto ba = radius_match(b, a);
  ASSERT_EQ(ab.size(), ba.size());
  std::set<std::tuple<int, int, int>> s1, s2;
  for (const auto& m : ab) s1.insert({m.query_idx, m.ref_idx, m.distance});
  for (const auto& m : ba) s2.insert({m.ref_idx, m.query_idx, m.distance});
  EXPECT_EQ(s1, s2);
  std::size_t brute = 0;
  for (const auto& x : a)
    for (const auto& y : b) brute += hamming(x.desc, y.desc) <= 102;
  EXPECT_EQ(ab.size(), brute);
  EXPECT_TRUE(std::is_sorted(ab.begin(), ab.end(), [](const Match& l, const Match& r) {
    return std::tie(l.query_idx, l.ref_idx) < std::tie(r.query_idx, r.ref_idx);
  }));
}

TEST(Matching, DltRecoversIdentityAndPlantedModel) {
  std::vector<Point2> pts;
  for (int i = 0; i < 8; ++i) pts.push_back({10.0 * i + 3.0 * (i % 3), 7.0 * (i % 4) + 2.0 * i});
  const auto h = fit_homography(pts, pts);
  ASSERT_TRUE(h.has_value());
  EXPECT_LT((h->matrix() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-6);

  const auto pp = fixtures::planted_problem(5, 20, 0);
  const auto g = fit_homography(pp.ref, pp.query);
  ASSERT_TRUE(g.has_value());
  const Eigen::Matrix3d expected = pp.h / pp.h(2, 2);
  EXPECT_LT((g->matrix() - expected).cwiseAbs().maxCoeff(), 1e-6);
  for (std::size_t i = 0; i < pp.ref.size(); ++i) {
    const auto p = g->apply(pp.ref[i]);
    ASSERT_TRUE(p.has_value());
    EXPECT_NEAR(p->x, pp.query[i].x, 1e-6);
    EXPECT_NEAR(p->y, pp.query[i].y, 1e-6);
  }
}

TEST(Matching, DltRejectsDegenerateInput) {
  const std::vector<Point2> three{{0, 0}, {1, 0}, {0, 1}};
  EXPECT_FALSE(fit_homography(three, three).has_value());
  const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
  EXPECT_FALSE(fit_homography(line, line).has_value());
}

TEST(Matching, RansacRecoversPlantedModelUnderBothSamplers) {
  for (auto sampling : {RansacSampling::Uniform, RansacSampling::Progressive}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto pp = fixtures::planted_problem(seed);
      RansacConfig cfg;
      cfg.sampling = sampling;
      cfg.seed = seed;
      const auto res = ransac_homography(pp.matches, pp.query, pp.ref, cfg);
      ASSERT_FALSE(res.degenerate());
      std::vector<int> expected(70);
      std::iota(expected.begin(), expected.end(), 0);
      EXPECT_EQ(res.inliers, expected);
      for (const Point2& c : {Point2{0, 0}, Point2{639, 0}, Point2{639, 479}, Point2{0, 479}}) {
        const Point2 want = fixtures::project(pp.h, c);
        const auto got = res.model->apply(c);
        ASSERT_TRUE(got.has_value());
        EXPECT_LT(std::hypot(got->x - want.x, got->y - want.y), 1.0);
      }
    }
  }
}

TEST(Matching, InliersAreExactlyThePointsWithinTolerance) {
  const auto pp = fixtures::planted_problem(11, 60, 40, 0.0);  // outliers may land close to the model
  const auto res = ransac_homography(pp.matches, pp.query, pp.ref);
  ASSERT_FALSE(res.degenerate());
  std::vector<int> expected;
  for (std::size_t i = 0; i < pp.matches.size(); ++i) {
    const auto p = res.model->apply(pp.ref[i]);
    if (p && std::hypot(p->x - pp.query[i].x, p->y - pp.query[i].y) < 3.0) expected.push_back(static_cast<int>(i));
  }
  EXPECT_EQ(res.inliers, expected);
  EXPECT_GE(res.inliers.size(), 60u);
}

TEST(Matching, FewerThanFourMatchesIsDegenerate) {
  const auto pp = fixtures::planted_problem(3, 3, 0);
  const auto res = ransac_homography(pp.matches, pp.query, pp.ref);
  EXPECT_TRUE(res.degenerate());
  EXPECT_TRUE(res.inliers.empty());
  EXPECT_TRUE(ransac_homography({}, {}, {}).degenerate());
}

TEST(Matching, DeterministicForFixedSeed) {
  const auto pp = fixtures::planted_problem(8, 30, 70, 9.0);
  for (auto sampling : {RansacSampling::Uniform, RansacSampling::Progressive}) {
    RansacConfig cfg;
    cfg.sampling = sampling;
    const auto a = ransac_homography(pp.matches, pp.query, pp.ref, cfg);
    const auto b = ransac_homography(pp.matches, pp.query, pp.ref, cfg);
    ASSERT_EQ(a.degenerate(), b.degenerate());
    EXPECT_EQ(a.inliers, b.inliers);
    if (!a.degenerate()) EXPECT_EQ(a.model->matrix(), b.model->matrix());
  }
}

TEST(Matching, UnrelatedDescriptorsGiveZeroMpr) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ux(0, 640), uy(0, 480);
  std::vector<Feature> a, b;
  for (int i = 0; i < 200; ++i) {
    a.push_back(with_desc(fixtures::random_descriptor(rng), ux(rng), uy(rng)));
    b.push_back(with_desc(fixtures::random_descriptor(rng), ux(rng), uy(rng)));
  }
  // Random 512-bit strings sit about 256 apart; none fall within 102.
  EXPECT_TRUE(radius_match(a, b).empty());
  EXPECT_EQ(count_mpr(a, b), 0);
}

TEST(Matching, VerifyPairOnShiftedCopies) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ux(20, 600), uy(20, 460);
  std::vector<Feature> ref, query;
  for (int i = 0; i < 50; ++i) {
    ref.push_back(with_desc(fixtures::random_descriptor(rng), ux(rng), uy(rng)));
    query.push_back(with_desc(flip_first(ref.back().desc, 10), ref.back().kp.x + 5.0, ref.back().kp.y - 3.0));
  }
  const auto v = verify_pair(query, ref);
  EXPECT_EQ(v.matches.size(), 50u);
  EXPECT_EQ(v.mpr(), 50);
  EXPECT_NEAR(v.ransac.model->matrix()(0, 2), 5.0, 1e-6);
}
