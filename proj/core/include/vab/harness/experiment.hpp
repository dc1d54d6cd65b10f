#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vab/bandit_env.hpp"
#include "vab/baselines.hpp"
#include "vab/harness/config.hpp"
#include "vab/harness/trace.hpp"
#include "vab/mdp_env.hpp"

namespace vab {

enum class Mode { bandit, mdp };

struct VofulSettings {
  double delta = 0.01;
  double c_iota = 1.0;
  int net_points = 128;
  int candidates = 1024;
  bool inject_theta_star = false;
};

struct VarlinSettings {
  double c_iota = 1.0;
  int net_points = 64;
  int candidates = 512;
  bool inject_theta_star = false;
  bool constrain_overflow = true;
  bool indicators = false;
};

struct ExperimentConfig {
  Mode mode = Mode::bandit;
  std::vector<std::string> agents;
  std::vector<long long> seeds;
  std::uint64_t master_seed = 0;
  std::filesystem::path output;
  int threads = 1;
  bool check_optimism = true;

  // bandit
  int d = 2;
  int rounds = 1000;
  ContextKind contexts = ContextKind::random_sphere;
  int arms_per_round = 16;
  Eigen::MatrixXd fixed_arms;
  NoiseKind noise = NoiseKind::scaled_rademacher;
  SigmaSchedule sigma = SigmaSchedule::constant(0.1);
  std::optional<Eigen::VectorXd> theta_star;
  double theta_norm = 0.5;
  VofulSettings voful;
  RidgeConfig oful;

  // mdp
  MixtureInstanceSpec mdp;
  int episodes = 200;
  std::optional<std::filesystem::path> instance_file;
  VarlinSettings varlin;
  RidgeConfig hoeffding;

  /// Reads every key for `mode`; unknown keys raise ConfigError.
  static ExperimentConfig from(const Config& cfg, Mode mode);
};

/// Runs every (agent, seed) pair; rows come out agent-major in config order,
/// then by seed order, then by index. Throws InvariantViolation when a model
/// or algorithm invariant fails mid-run.
RegretTrace run_experiment(const ExperimentConfig& cfg);

/// `output`, redirected into $VAB_OUT_DIR when that variable is set.
std::filesystem::path resolve_output(const std::filesystem::path& output);

/// Bandit instance for one seed (theta* and context stream).
BanditInstance make_bandit_instance(const ExperimentConfig& cfg, long long seed);
/// Mixture MDP for one seed.
MixtureMDP make_mdp_instance(const ExperimentConfig& cfg, long long seed);

/// Runs `tasks` jobs on up to `threads` workers; job i writes only its own
/// slot, so results never depend on scheduling. Rethrows the first failure
/// in job order.
void run_parallel(int tasks, int threads, const std::function<void(int)>& job);

}  // namespace vab
