#pragma once

// Randomized small runs comparing the agents' incremental membership
// decisions with raw-history recomputation. Shared by the unit tests and
// the acceptance binary.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "naive.hpp"
#include "vab/mdp_env.hpp"
#include "vab/net.hpp"
#include "vab/rng.hpp"
#include "vab/varlin.hpp"
#include "vab/voful.hpp"

namespace vab::naive {

struct EquivalenceResult {
  long decisions = 0;
  long mismatches = 0;
  long alive_checks = 0;
  bool any_removal = false;
};

inline bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline Eigen::VectorXd random_ball(int d, double radius, Rng& rng) {
  Eigen::VectorXd v(d);
  for (int a = 0; a < d; ++a) v[a] = rng.normal();
  return v.normalized() * radius * std::pow(rng.uniform(), 1.0 / d);
}

// Candidate-level bookkeeping shared by both agents. `member` holds this
// step's raw-history decision for every candidate.
// `full_pool`: this step re-tested every candidate (a scheduled refresh while
// in fallback); otherwise only the surviving ones were tested.
template <typename Agent>
void compare_alive(const Agent& agent, const std::vector<std::uint8_t>& member, bool full_pool,
                   bool refreshed, std::vector<std::uint8_t>& expect, EquivalenceResult& out) {
  const auto& cands = agent.candidates();
  const int n = cands.size();
  if (agent.in_fallback()) {
    // A re-test that ends in fallback means nobody in the pool passed.
    if (refreshed) {
      ++out.alive_checks;
      for (int i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        if (member[u] && (full_pool || expect[u])) ++out.mismatches;
      }
    }
    return;
  }
  for (int i = 0; i < n; ++i) {
    auto& e = expect[static_cast<std::size_t>(i)];
    e = full_pool ? member[static_cast<std::size_t>(i)] : (e && member[static_cast<std::size_t>(i)]);
  }
  ++out.alive_checks;
  for (int i = 0; i < n; ++i)
    if ((expect[static_cast<std::size_t>(i)] != 0) != cands.alive(i)) ++out.mismatches;
  if (cands.alive_count() < n) out.any_removal = true;
}

inline EquivalenceResult voful_equivalence_run(std::uint64_t seed) {
  Rng rng(seed);
  const int d = 1 + static_cast<int>(rng.next() % 3);
  const int rounds = 20 + static_cast<int>(rng.next() % 31);
  const int net_size = 8 + static_cast<int>(rng.next() % 25);
  const double sigma = rng.uniform(0.0, 0.4);
  const double iota = rng.uniform(0.05, 1.0);

  DirectionNet net = make_net(d, 1.0, default_resolution(d, 1.0, net_size), NormKind::l2, seed, net_size);
  const Eigen::VectorXd theta_star = random_ball(d, 0.5, rng);
  VofulConfig cfg;
  cfg.rounds = rounds;
  cfg.iota = iota;
  VofulAgent agent(make_candidates(d, 32, NormKind::l2, seed, theta_star), net, cfg);

  const int n = agent.candidates().size();
  std::vector<std::uint8_t> expect(static_cast<std::size_t>(n), 1), member(static_cast<std::size_t>(n));
  std::vector<BanditSample> hist;
  EquivalenceResult out;
  for (int k = 1; k <= rounds; ++k) {
    Eigen::MatrixXd contexts(d, 4);
    for (int a = 0; a < 4; ++a) contexts.col(a) = random_ball(d, 1.0, rng);
    const Eigen::VectorXd x = contexts.col(agent.select_action(contexts));
    const double y = x.dot(theta_star) + sigma * rng.sign();
    const bool was_fallback = agent.in_fallback();
    agent.update(x, y);
    hist.push_back({x, y});
    const bool refreshed = !was_fallback || power_of_two(agent.round());

    for (int i = 0; i < n; ++i) {
      const bool want = voful_member(hist, agent.net().points, agent.ladder().clip_levels(), iota,
                                     agent.candidates().candidate(i));
      member[static_cast<std::size_t>(i)] = want ? 1 : 0;
      ++out.decisions;
      if (agent.membership(agent.candidates().candidate(i)) != want) ++out.mismatches;
    }
    for (int p = 0; p < 4; ++p) {
      const Eigen::VectorXd probe = random_ball(d, 1.0, rng);
      ++out.decisions;
      if (agent.membership(probe) !=
          voful_member(hist, agent.net().points, agent.ladder().clip_levels(), iota, probe))
        ++out.mismatches;
    }
    compare_alive(agent, member, was_fallback && refreshed, refreshed, expect, out);
  }
  return out;
}

inline EquivalenceResult varlin_equivalence_run(std::uint64_t seed) {
  Rng rng(seed);
  MixtureInstanceSpec spec;
  spec.dim = 1 + static_cast<int>(rng.next() % 3);
  spec.states = 3 + static_cast<int>(rng.next() % 2);
  spec.actions = 2;
  spec.horizon = 2 + static_cast<int>(rng.next() % 2);
  spec.branching = 2;
  spec.seed = seed;
  const MixtureMDP mdp = make_goal_instance(spec);
  const int d = spec.dim;
  const int episodes = 5 + static_cast<int>(rng.next() % 16);
  const int net_size = 2 * d + static_cast<int>(rng.next() % 9);
  const double iota = rng.uniform(0.02, 0.4);

  VarlinConfig cfg;
  cfg.episodes = episodes;
  cfg.iota = iota;
  cfg.constrain_overflow = rng.bernoulli(0.5);
  cfg.theta_star = mdp.theta_star();
  cfg.indicators = true;
  DirectionNet net = make_net(d, 1.0, default_resolution(d, 1.0, net_size), NormKind::l2, seed, net_size);
  VarlinAgent agent(BaseModelSet::from(mdp), make_candidates(d, 16, NormKind::l1, seed, mdp.theta_star()),
                    net, cfg);

  const int n = agent.candidates().size();
  std::vector<std::uint8_t> expect(static_cast<std::size_t>(n), 1), member(static_cast<std::size_t>(n));
  std::vector<MdpSample> hist;
  EquivalenceResult out;
  Rng env_rng(seed ^ 0x5bd1e995u);
  for (int k = 1; k <= episodes; ++k) {
    const bool was_fallback = agent.in_fallback();
    const VarlinEpisode ep = agent.run_episode([&](int s, int a) { return mdp.step(s, a, env_rng); });
    append_episode(hist, ep);
    const bool refreshed = !was_fallback || power_of_two(agent.episode());

    for (int i = 0; i < n; ++i) {
      const bool want = varlin_member(hist, agent.net().points, agent.ladder(), iota,
                                      cfg.constrain_overflow, agent.candidates().candidate(i));
      member[static_cast<std::size_t>(i)] = want ? 1 : 0;
      ++out.decisions;
      if (agent.membership(agent.candidates().candidate(i)) != want) ++out.mismatches;
    }
    compare_alive(agent, member, was_fallback && refreshed, refreshed, expect, out);
  }
  return out;
}

}  // namespace vab::naive
