#include <benchmark/benchmark.h>

#include "vab/mdp_env.hpp"
#include "vab/net.hpp"
#include "vab/potentials.hpp"
#include "vab/rng.hpp"
#include "vab/varlin.hpp"
#include "vab/voful.hpp"

namespace {

Eigen::VectorXd unit_ball(int d, vab::Rng& rng) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  return v.normalized() * rng.uniform();
}

vab::MixtureMDP goal_mdp(int horizon) {
  vab::MixtureInstanceSpec spec;
  spec.states = 4;
  spec.dim = 2;
  spec.horizon = horizon;
  spec.branching = 3;
  spec.seed = 5;
  return vab::make_goal_instance(spec);
}

vab::VarlinAgent varlin_agent(const vab::MixtureMDP& mdp, int episodes) {
  vab::VarlinConfig cfg;
  cfg.episodes = episodes;
  cfg.iota_scale = 0.01;
  return vab::VarlinAgent(vab::BaseModelSet::from(mdp), vab::make_candidates(2, 512, vab::NormKind::l1, 3),
                          vab::make_net(2, 2.0, vab::default_resolution(2, 2.0, 64), vab::NormKind::l1, 4, 64),
                          cfg);
}

}  // namespace

// One VOFUL round (select + update + filter) with 1024 candidates after a warm-up.
static void BM_VofulRound(benchmark::State& state) {
  const int nets = static_cast<int>(state.range(0));
  vab::VofulConfig cfg;
  cfg.rounds = 2000;
  cfg.iota_scale = 0.0003;
  vab::VofulAgent agent(vab::make_candidates(2, 1024, vab::NormKind::l2, 1),
                        vab::make_net(2, 1.0, vab::default_resolution(2, 1.0, nets), vab::NormKind::l2, 2, nets),
                        cfg);
  const Eigen::Vector2d star(0.3, -0.2);
  vab::Rng rng(7);
  Eigen::MatrixXd ctx(2, 16);
  const auto round = [&] {
    for (int a = 0; a < ctx.cols(); ++a) ctx.col(a) = unit_ball(2, rng);
    const int arm = agent.select_action(ctx);
    agent.update(ctx.col(arm), ctx.col(arm).dot(star) + 0.1 * rng.sign());
  };
  for (int k = 0; k < 200; ++k) round();
  for (auto _ : state) round();
}
BENCHMARK(BM_VofulRound)->Arg(32)->Arg(128);

static void BM_VofulMembership(benchmark::State& state) {
  vab::VofulConfig cfg;
  cfg.rounds = 2000;
  vab::VofulAgent agent(vab::make_candidates(2, 64, vab::NormKind::l2, 1),
                        vab::make_net(2, 1.0, vab::default_resolution(2, 1.0, 128), vab::NormKind::l2, 2, 128), cfg);
  vab::Rng rng(8);
  const Eigen::VectorXd theta = unit_ball(2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(agent.membership(theta));
}
BENCHMARK(BM_VofulMembership);

static void BM_VarlinEpisode(benchmark::State& state) {
  const auto mdp = goal_mdp(static_cast<int>(state.range(0)));
  auto agent = varlin_agent(mdp, 500);
  vab::Rng rng(9);
  const auto env = [&](int s, int a) { return mdp.step(s, a, rng); };
  for (int k = 0; k < 20; ++k) agent.run_episode(env);
  for (auto _ : state) benchmark::DoNotOptimize(agent.run_episode(env));
}
BENCHMARK(BM_VarlinEpisode)->Arg(10)->Arg(40)->Unit(benchmark::kMicrosecond);

static void BM_VarlinPlan(benchmark::State& state) {
  const auto mdp = goal_mdp(static_cast<int>(state.range(0)));
  const auto agent = varlin_agent(mdp, 500);
  vab::QTables q;
  vab::VTables v;
  for (auto _ : state) {
    agent.plan(q, v);
    benchmark::DoNotOptimize(q.data());
  }
}
BENCHMARK(BM_VarlinPlan)->Arg(10)->Arg(40)->Unit(benchmark::kMicrosecond);

static void BM_ClippedEllipticalSum(benchmark::State& state) {
  const auto sp = vab::random_sequence(4, static_cast<int>(state.range(0)), 0.1, 11);
  for (auto _ : state) benchmark::DoNotOptimize(vab::clipped_elliptical_sum(sp));
}
BENCHMARK(BM_ClippedEllipticalSum)->Arg(1000)->Arg(5000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
