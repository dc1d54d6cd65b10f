#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "../support/fell_grid.hpp"
#include "vab/core.hpp"
#include "vab/errors.hpp"
#include "vab/net.hpp"
#include "vab/rng.hpp"

using namespace vab;

TEST(Clip, Examples) {
  EXPECT_EQ(clip(0.5, 1.0), 0.5);
  EXPECT_EQ(clip(-3.0, 1.0), -1.0);
  EXPECT_EQ(clip(0.0, 0.25), 0.0);
  EXPECT_EQ(clip(7.0, 2.0), 2.0);
}

TEST(FEll, Examples) {
  EXPECT_DOUBLE_EQ(f_ell(0.5, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(f_ell(2.0, 1.0), 3.0);
  EXPECT_DOUBLE_EQ(f_ell(-2.0, 1.0), 3.0);
}

TEST(FEll, GridSandwichAndConvexity) {
  const IndexRange levels = ClipLadder::for_bandit(2000).clip_levels();
  ASSERT_EQ(levels.last, 12);
  EXPECT_EQ(grid::sandwich(levels).failures, 0);
  EXPECT_EQ(grid::library_matches_exact(levels).failures, 0);
  EXPECT_EQ(grid::convexity({1, 3}).failures, 0);
}

TEST(Ladder, LevelsAreDyadic) {
  EXPECT_EQ(ClipLadder::level(1), 2.0);
  EXPECT_EQ(ClipLadder::level(2), 1.0);
  EXPECT_EQ(ClipLadder::level(5), 0.125);
}

TEST(Ladder, BanditRanges) {
  const auto l = ClipLadder::for_bandit(1024);
  EXPECT_EQ(l.clip_levels().first, 1);
  EXPECT_EQ(l.clip_levels().last, 11);
  EXPECT_EQ(ClipLadder::for_bandit(1025).clip_levels().last, 12);
}

TEST(Ladder, MixtureRanges) {
  const auto l = ClipLadder::for_mixture(10, 100);
  EXPECT_EQ(l.moments().first, 0);
  EXPECT_EQ(l.moments().last, 4);
  // ceil(5 log2(1000) + 3) = ceil(52.83)
  EXPECT_EQ(l.variance_layers().last, 53);
  EXPECT_EQ(l.clip_levels().last, 53);
  EXPECT_EQ(l.overflow_layer(), 54);
  EXPECT_EQ(ClipLadder::for_mixture(1, 2).moments().last, 0);
}

TEST(Ladder, AssignLayer) {
  const auto l = ClipLadder::for_mixture(10, 100);
  EXPECT_EQ(l.assign_layer(1.0), 2);
  EXPECT_EQ(l.assign_layer(0.0), l.overflow_layer());
  EXPECT_EQ(l.assign_layer(0.6), 2);
  EXPECT_EQ(l.assign_layer(0.5), 3);
  EXPECT_EQ(l.assign_layer(2.0), 1);
  EXPECT_EQ(l.assign_layer(1.5), 1);
  EXPECT_EQ(l.assign_layer(1e-300), l.overflow_layer());
  EXPECT_THROW(l.assign_layer(-0.1), PreconditionError);
  EXPECT_THROW(l.assign_layer(2.5), std::out_of_range);
}

TEST(Ladder, AssignLayerMatchesIntervalScan) {
  const auto l = ClipLadder::for_mixture(4, 50);
  Rng rng(3);
  for (int t = 0; t < 2000; ++t) {
    const double eta = std::ldexp(rng.uniform(), -static_cast<int>(rng.next() % 40)) * 2.0;
    int want = l.overflow_layer();
    for (int i = l.variance_layers().first; i <= l.variance_layers().last; ++i)
      if (eta > ClipLadder::level(i + 1) && eta <= ClipLadder::level(i)) want = i;
    EXPECT_EQ(l.assign_layer(eta), want) << eta;
  }
}

TEST(Iota, Bandit) {
  // Values from direct evaluation of 60 d ln(dK/delta) (log2 log2 K)^2.
  EXPECT_NEAR(iota_bandit(2, 1024, 0.01), 16194.989534871936, 1e-8);
  EXPECT_NEAR(iota_bandit(1, 4, 0.5), 124.76649250079015, 1e-10);
  EXPECT_NEAR(iota_bandit(2, 1024, 0.01, 0.5), 0.5 * 16194.989534871936, 1e-8);
  EXPECT_THROW(iota_bandit(0, 10, 0.1), PreconditionError);
  EXPECT_THROW(iota_bandit(1, 3, 0.1), PreconditionError);
  EXPECT_THROW(iota_bandit(1, 10, 1.0), PreconditionError);
}

TEST(Iota, BanditLinearInD) {
  // Not exact doubling: d also appears inside the logarithm.
  const double a = iota_bandit(2, 512, 0.05);
  const double b = iota_bandit(4, 512, 0.05);
  EXPECT_NEAR(b / a, 2.0 * std::log(4.0 * 512 / 0.05) / std::log(2.0 * 512 / 0.05), 1e-12);
}

TEST(Iota, Mdp) {
  EXPECT_NEAR(iota_mdp(2, 10, 100), 69.07755278982137, 1e-10);
  EXPECT_NEAR(iota_mdp(1, 1, 3), 5.493061443340549, 1e-12);
  EXPECT_DOUBLE_EQ(iota_mdp(4, 10, 100), 2.0 * iota_mdp(2, 10, 100));
  EXPECT_THROW(iota_mdp(1, 1, 1), PreconditionError);
}

TEST(Net, AxisPointsAndContainment) {
  const auto net = make_net(2, 1.0, 0.5, NormKind::l2, 11, 8);
  ASSERT_EQ(net.dim(), 2);
  ASSERT_LE(net.size(), 8);
  std::set<std::pair<double, double>> pts;
  for (int i = 0; i < net.size(); ++i) {
    pts.insert({net.points(0, i), net.points(1, i)});
    EXPECT_LE(net.points.col(i).norm(), 1.0 + 1e-12);
  }
  for (const auto& p : {std::pair{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}})
    EXPECT_TRUE(pts.count(p)) << p.first << "," << p.second;
}

TEST(Net, DeterministicAndL1Contained) {
  const auto a = make_net(3, 1.0, 0.1, NormKind::l1, 5, 200);
  const auto b = make_net(3, 1.0, 0.1, NormKind::l1, 5, 200);
  EXPECT_EQ(a.points, b.points);
  for (int i = 0; i < a.size(); ++i) EXPECT_LE(a.points.col(i).lpNorm<1>(), 1.0 + 1e-12);
  const auto c = make_net(3, 1.0, 0.1, NormKind::l1, 6, 200);
  EXPECT_NE(a.points, c.points);
}

TEST(Candidates, InjectionAndMask) {
  Eigen::VectorXd star(2);
  star << 0.3, -0.2;
  auto set = make_candidates(2, 20, NormKind::l2, 1, star);
  ASSERT_TRUE(set.injected_index().has_value());
  EXPECT_EQ(set.candidate(*set.injected_index()), star);
  EXPECT_EQ(set.alive_count(), set.size());

  std::vector<std::uint8_t> kill(static_cast<std::size_t>(set.size()), 0);
  kill[0] = kill[3] = 1;
  EXPECT_EQ(set.remove(kill), 2);
  EXPECT_EQ(set.remove(kill), 0);
  EXPECT_FALSE(set.alive(0));
  EXPECT_EQ(set.alive_count(), set.size() - 2);

  set.retain_only(5);
  EXPECT_EQ(set.alive_count(), 1);
  EXPECT_EQ(set.alive_indices()[0], 5);

  std::vector<std::uint8_t> alive(static_cast<std::size_t>(set.size()), 1);
  set.assign(alive);
  EXPECT_EQ(set.alive_count(), set.size());
  alive.pop_back();
  EXPECT_THROW(set.assign(alive), PreconditionError);
}

TEST(Candidates, AliveBox) {
  Eigen::MatrixXd m(2, 3);
  m << 0.1, -0.5, 0.3,
       0.2, 0.4, -0.6;
  ParameterCandidateSet set(m, NormKind::l2);
  Eigen::VectorXd lo, hi;
  set.alive_box(lo, hi);
  EXPECT_DOUBLE_EQ(lo[0], -0.5);
  EXPECT_DOUBLE_EQ(hi[1], 0.4);
  set.retain_only(2);
  set.alive_box(lo, hi);
  EXPECT_EQ(lo, m.col(2));
  EXPECT_EQ(hi, m.col(2));
}

TEST(Rng, DerivedSeedsSeparateTags) {
  EXPECT_EQ(derive_seed(1, 2, "a"), derive_seed(1, 2, "a"));
  EXPECT_NE(derive_seed(1, 2, "a"), derive_seed(1, 2, "b"));
  EXPECT_NE(derive_seed(1, 2, "a"), derive_seed(1, 3, "a"));
  EXPECT_NE(derive_seed(1, 2, "a"), derive_seed(2, 2, "a"));
  Rng r(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}
