#include <gtest/gtest.h>

#include "../support/equivalence.hpp"
#include "../support/naive.hpp"
#include "vab/errors.hpp"
#include "vab/voful.hpp"

using namespace vab;

namespace {

VofulAgent small_agent(double iota, int rounds = 64, std::optional<Eigen::VectorXd> inject = std::nullopt) {
  VofulConfig cfg;
  cfg.rounds = rounds;
  cfg.iota = iota;
  return VofulAgent(make_candidates(2, 40, NormKind::l2, 4, inject),
                    make_net(2, 1.0, 0.3, NormKind::l2, 4, 12), cfg);
}

}  // namespace

TEST(Voful, SingleContext) {
  auto agent = small_agent(1.0);
  EXPECT_EQ(agent.select_action(Eigen::MatrixXd::Ones(2, 1) * 0.5), 0);
  EXPECT_THROW(agent.select_action(Eigen::MatrixXd(2, 0)), EmptyContexts);
}

TEST(Voful, SingleCandidateArgmax) {
  Eigen::MatrixXd cand(2, 1);
  cand << 0.9, 0.1;
  VofulConfig cfg;
  cfg.rounds = 16;
  VofulAgent agent(ParameterCandidateSet(cand, NormKind::l2), make_net(2, 1.0, 0.5, NormKind::l2, 1, 8), cfg);
  EXPECT_EQ(agent.select_action(Eigen::Matrix2d::Identity()), 0);
  Eigen::Matrix2d swapped;
  swapped << 0, 1, 1, 0;
  EXPECT_EQ(agent.select_action(swapped), 1);
}

TEST(Voful, SelectMatchesDoubleLoop) {
  auto agent = small_agent(0.3);
  Rng rng(5);
  for (int k = 0; k < 30; ++k) {
    Eigen::MatrixXd ctx(2, 6);
    for (int a = 0; a < 6; ++a) ctx.col(a) = naive::random_ball(2, 1.0, rng);
    int best_a = 0;
    double best = -1e300;
    for (int a = 0; a < ctx.cols(); ++a)
      for (int i = 0; i < agent.candidates().size(); ++i) {
        if (!agent.candidates().alive(i)) continue;
        const double v = ctx.col(a).dot(agent.candidates().candidate(i));
        if (v > best) {
          best = v;
          best_a = a;
        }
      }
    const int got = agent.select_action(ctx);
    EXPECT_EQ(got, best_a);
    agent.update(ctx.col(got), 0.5 * ctx.col(got)[0]);
  }
}

TEST(Voful, EmptyHistoryAcceptsEverything) {
  const auto agent = small_agent(1.0);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_TRUE(agent.membership(naive::random_ball(2, 1.0, rng)));
  EXPECT_EQ(agent.violation_ratio(Eigen::Vector2d(0.3, 0.3)), 0.0);
}

TEST(Voful, NoiselessTruthStaysMember) {
  const Eigen::Vector2d star(0.4, -0.3);
  auto agent = small_agent(0.05, 200, star);
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd x = naive::random_ball(2, 1.0, rng);
    const auto step = agent.update(x, x.dot(star));
    ASSERT_TRUE(agent.membership(star));
    ASSERT_TRUE(agent.candidates().alive(*agent.candidates().injected_index()));
    ASSERT_FALSE(step.fallback);
  }
  EXPECT_LT(agent.candidates().alive_count(), agent.candidates().size());
}

TEST(Voful, ZeroContextChangesNothing) {
  auto agent = small_agent(0.5);
  agent.update(Eigen::Vector2d(0.6, 0.1), 0.2);
  const auto before = agent.record(3, 2);
  agent.update(Eigen::Vector2d::Zero(), 0.7);
  const auto after = agent.record(3, 2);
  EXPECT_EQ(before.s_x, after.s_x);
  EXPECT_EQ(before.q_yy, after.q_yy);
  EXPECT_EQ(before.count, after.count);
}

TEST(Voful, AccumulatorsMatchDirectSums) {
  auto agent = small_agent(0.5);
  Rng rng(6);
  std::vector<naive::BanditSample> hist;
  for (int k = 0; k < 25; ++k) {
    const Eigen::VectorXd x = naive::random_ball(2, 1.0, rng);
    const double y = rng.uniform(-1.0, 1.0);
    agent.update(x, y);
    hist.push_back({x, y});
  }
  const auto& net = agent.net().points;
  for (int mu = 0; mu < agent.net().size(); ++mu) {
    for (int j = agent.ladder().clip_levels().first; j <= agent.ladder().clip_levels().last; ++j) {
      const double l = ClipLadder::level(j);
      Eigen::Vector2d sx = Eigen::Vector2d::Zero();
      Eigen::Vector2d qxy = Eigen::Vector2d::Zero();
      Eigen::Matrix2d qxx = Eigen::Matrix2d::Zero();
      double sy = 0.0, qyy = 0.0;
      for (const auto& s : hist) {
        const double c = clip(s.x.dot(net.col(mu)), l);
        sx += c * s.x;
        sy += c * s.y;
        qyy += c * c * s.y * s.y;
        qxy += c * c * s.y * s.x;
        qxx += c * c * s.x * s.x.transpose();
      }
      const auto r = agent.record(mu, j);
      EXPECT_LT((r.s_x - sx).norm(), 1e-12);
      EXPECT_NEAR(r.s_y, sy, 1e-12);
      EXPECT_NEAR(r.q_yy, qyy, 1e-12);
      EXPECT_LT((r.q_xy - qxy).norm(), 1e-12);
      EXPECT_LT((r.q_xx - qxx).norm(), 1e-12);
    }
  }
}

TEST(Voful, PhiPsi) {
  auto agent = small_agent(0.5);
  const Eigen::Vector2d ref(0.1, 0.2);
  const auto [phi0, psi0] = agent.phi_psi(0, 3, ref);
  EXPECT_EQ(phi0, ClipLadder::level(3) * ClipLadder::level(3));
  EXPECT_EQ(psi0, 0.0);

  Rng rng(8);
  std::vector<naive::BanditSample> hist;
  for (int k = 0; k < 15; ++k) {
    const Eigen::VectorXd x = naive::random_ball(2, 1.0, rng);
    const double y = rng.uniform(-0.5, 0.5);
    agent.update(x, y);
    hist.push_back({x, y});
  }
  for (int mu = 0; mu < agent.net().size(); ++mu) {
    const Eigen::VectorXd m = agent.net().points.col(mu);
    const double l = ClipLadder::level(2);
    double phi = l * l, psi = 0.0;
    for (const auto& s : hist) {
      const double c = clip(s.x.dot(m), l);
      phi += c * s.x.dot(m);
      psi += c * c * std::pow(s.y - s.x.dot(ref), 2);
    }
    const auto [p, q] = agent.phi_psi(mu, 2, ref);
    EXPECT_GE(p, l * l);
    EXPECT_NEAR(p, phi, 1e-12);
    EXPECT_NEAR(q, psi, 1e-12);
  }
}

TEST(Voful, MembershipMatchesNaiveOnShortRun) {
  auto agent = small_agent(0.2, 16);
  Rng rng(11);
  std::vector<naive::BanditSample> hist;
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd x = naive::random_ball(2, 1.0, rng);
    const double y = 0.3 * x[0] + 0.1 * rng.sign();
    agent.update(x, y);
    hist.push_back({x, y});
  }
  for (int t = 0; t < 200; ++t) {
    const Eigen::VectorXd th = naive::random_ball(2, 1.0, rng);
    EXPECT_EQ(agent.membership(th),
              naive::voful_member(hist, agent.net().points, agent.ladder().clip_levels(), 0.2, th));
  }
}

TEST(Voful, AliveSetNonincreasingWithoutFallback) {
  auto agent = small_agent(0.1, 100);
  Rng rng(12);
  int prev = agent.candidates().alive_count();
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd x = naive::random_ball(2, 1.0, rng);
    const bool was = agent.in_fallback();
    const auto step = agent.update(x, 0.2 * x[1] + 0.05 * rng.sign());
    if (!was && !step.fallback) {
      EXPECT_LE(step.alive, prev);
      EXPECT_EQ(step.removed, prev - step.alive);
    }
    prev = step.alive;
  }
}

TEST(Voful, FallbackKeepsOneCandidate) {
  // Candidates far from a consistent signal with a tiny width.
  auto agent = small_agent(1e-4, 64);
  Rng rng(13);
  bool fired = false;
  for (int k = 0; k < 64; ++k) {
    const Eigen::VectorXd x = naive::random_ball(2, 1.0, rng);
    const auto step = agent.update(x, rng.uniform(-1.0, 1.0));
    if (step.fallback) {
      fired = true;
      EXPECT_EQ(step.alive, 1);
    }
    EXPECT_GE(agent.candidates().alive_count(), 1);
  }
  EXPECT_TRUE(fired);
}

TEST(Voful, RandomizedEquivalence) {
  long decisions = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = naive::voful_equivalence_run(1000 + s);
    EXPECT_EQ(r.mismatches, 0) << "seed " << s;
    decisions += r.decisions;
  }
  EXPECT_GT(decisions, 0);
}

TEST(Voful, UpdateValidation) {
  auto agent = small_agent(1.0);
  EXPECT_THROW(agent.update(Eigen::Vector2d(1.0, 1.0), 0.0), PreconditionError);
  EXPECT_THROW(agent.update(Eigen::Vector2d(0.1, 0.1), 1.5), PreconditionError);
  EXPECT_THROW(agent.update(Eigen::Vector3d(0.1, 0.1, 0.1), 0.0), PreconditionError);
  EXPECT_THROW(agent.record(-1, 1), PreconditionError);
}
