#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "vab/baselines.hpp"
#include "vab/errors.hpp"

using namespace vab;

TEST(Ridge, Beta) {
  RidgeConfig cfg;
  RidgeState r(2, cfg);
  EXPECT_NEAR(r.beta(), 1.0 + std::sqrt(2.0 * std::log(100.0)), 1e-14);
  r.update(Eigen::Vector2d(1, 0), 0.5);
  EXPECT_NEAR(r.beta(), 1.0 + std::sqrt(2.0 * std::log(100.0) + 2.0 * std::log(1.5)), 1e-14);
  cfg.beta = 0.3;
  EXPECT_EQ(RidgeState(2, cfg).beta(), 0.3);
}

TEST(Ridge, NoiselessRecovery) {
  RidgeConfig cfg;
  cfg.lambda = 1e-12;
  RidgeState r(3, cfg);
  const Eigen::Vector3d star(0.2, -0.5, 0.1);
  for (const auto& x : {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0.3, 0.8, 0), Eigen::Vector3d(0.1, 0.2, 0.9)})
    r.update(x, x.dot(star));
  EXPECT_LT((r.estimate() - star).norm(), 1e-8);
  EXPECT_GE(r.gram().selfadjointView<Eigen::Lower>().eigenvalues().minCoeff(), cfg.lambda * 0.999);
}

TEST(Oful, NoDataTiesGoFirst) {
  const OfulAgent agent(2, RidgeConfig{});
  Eigen::Matrix2d ctx;
  ctx << 0, 1, 1, 0;
  EXPECT_EQ(agent.select_action(ctx), 0);
  EXPECT_EQ(agent.select_action(Eigen::MatrixXd::Constant(2, 1, 0.3)), 0);
  EXPECT_THROW(agent.select_action(Eigen::MatrixXd(2, 0)), EmptyContexts);
}

TEST(Oful, TwoObservationsHandSolved) {
  RidgeConfig cfg;
  cfg.beta = 0.5;
  OfulAgent agent(2, cfg);
  agent.update(Eigen::Vector2d(1, 0), 1.0);
  agent.update(Eigen::Vector2d(1, 1), 0.0);
  // Gram = [[3, 1], [1, 2]], moment = [1, 0]: estimate = [2, -1] / 5,
  // inverse Gram = [[2, -1], [-1, 3]] / 5.
  EXPECT_LT((agent.ridge().estimate() - Eigen::Vector2d(0.4, -0.2)).norm(), 1e-15);
  Eigen::MatrixXd ctx(2, 3);
  ctx << 1, 0, 0.6,
         0, 1, 0.8;
  const double s0 = 0.4 + 0.5 * std::sqrt(2.0 / 5.0);
  const double s1 = -0.2 + 0.5 * std::sqrt(3.0 / 5.0);
  const double s2 = 0.6 * 0.4 - 0.8 * 0.2 +
                    0.5 * std::sqrt((2 * 0.36 - 2 * 0.48 + 3 * 0.64) / 5.0);
  const int want = s0 >= s1 && s0 >= s2 ? 0 : (s1 >= s2 ? 1 : 2);
  EXPECT_EQ(agent.select_action(ctx), want);
  EXPECT_NEAR(agent.ridge().width(ctx.col(2)), std::sqrt((2 * 0.36 - 2 * 0.48 + 3 * 0.64) / 5.0), 1e-15);
}

namespace {

MixtureMDP tiny_goal(int dim) {
  MixtureInstanceSpec spec;
  spec.states = 4;
  spec.dim = dim;
  spec.horizon = 3;
  spec.seed = 21;
  return make_goal_instance(spec);
}

}  // namespace

TEST(Hoeffding, NoDataIsOptimistic) {
  const auto mdp = tiny_goal(2);
  const HoeffdingVtrAgent agent(BaseModelSet::from(mdp), RidgeConfig{});
  QTables q;
  VTables v;
  agent.plan(q, v);
  // Width at the top step uses V_{H+1} = 0, so only the reward remains.
  EXPECT_EQ(q[2], mdp.reward());
  const auto models = BaseModelSet::from(mdp);
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) {
      const auto x = models.expectation_row(s, a, v[2]);
      EXPECT_NEAR(q[1](s, a), std::min(1.0, mdp.reward()(s, a) + agent.ridge().beta() * x.norm()), 1e-15);
    }
}

TEST(Hoeffding, ZeroRewardZeroBetaIsZero) {
  auto models = BaseModelSet::from(tiny_goal(2));
  models.reward.setZero();
  RidgeConfig cfg;
  cfg.beta = 0.0;
  const HoeffdingVtrAgent agent(models, cfg);
  QTables q;
  VTables v;
  agent.plan(q, v);
  for (const auto& t : q) EXPECT_EQ(t, Eigen::MatrixXd::Zero(4, 2));
}

TEST(Hoeffding, DeterministicFitConvergesToOptimal) {
  // d = 1: the single model is the truth, so theta_hat -> 1 and the bonus
  // shrinks; with a small fixed radius Q reaches Q*.
  const auto mdp = tiny_goal(1);
  RidgeConfig cfg;
  cfg.beta = 1e-3;
  cfg.lambda = 1e-6;
  HoeffdingVtrAgent agent(BaseModelSet::from(mdp), cfg);
  Rng rng(3);
  for (int k = 0; k < 3000; ++k) agent.run_episode([&](int s, int a) { return mdp.step(s, a, rng); });
  QTables q;
  VTables v;
  agent.plan(q, v);
  const auto star = mdp.optimal_q();
  for (int h = 0; h < 3; ++h) EXPECT_LT((q[static_cast<std::size_t>(h)] - star[static_cast<std::size_t>(h)]).cwiseAbs().maxCoeff(), 0.02);
  EXPECT_NEAR(mdp.policy_value(q), mdp.policy_value(star), 1e-12);
}
