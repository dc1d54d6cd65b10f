#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "vab/rng.hpp"

namespace vab {

/// Q_h as an S x A matrix; entry h - 1 holds Q_h for h = 1..H.
using QTables = std::vector<Eigen::MatrixXd>;
/// V_h as an S-vector; entry h - 1 holds V_h for h = 1..H+1.
using VTables = std::vector<Eigen::VectorXd>;

struct EpisodeTrace {
  std::vector<int> states;   // s_1 .. s_{H+1}
  std::vector<int> actions;  // a_1 .. a_H
  std::vector<double> rewards;

  double total_reward() const;
};

/// Tabular, time-homogeneous episodic MDP whose kernel is
/// P = sum_i theta*_i P_i over known base models P_i. Immutable.
class MixtureMDP {
 public:
  /// base[i] is (S*A) x S with row s*A + a holding P_i(. | s, a).
  MixtureMDP(int states, int actions, int horizon, std::vector<Eigen::MatrixXd> base,
             Eigen::VectorXd theta_star, Eigen::MatrixXd reward, int initial_state = 0);

  int states() const { return states_; }
  int actions() const { return actions_; }
  int dim() const { return static_cast<int>(base_.size()); }
  int horizon() const { return horizon_; }
  int initial_state() const { return initial_; }
  const Eigen::VectorXd& theta_star() const { return theta_; }
  const Eigen::MatrixXd& reward() const { return reward_; }
  const Eigen::MatrixXd& base_model(int i) const { return base_[static_cast<std::size_t>(i)]; }
  /// sum_i theta*_i P_i, same layout as a base model.
  const Eigen::MatrixXd& kernel() const { return kernel_; }

  int row(int s, int a) const { return s * actions_ + a; }

  double base_expectation(int i, int s, int a, const Eigen::VectorXd& v) const;
  /// (S*A) x d matrix whose column i is P_i v.
  Eigen::MatrixXd base_expectations(const Eigen::VectorXd& v) const;

  int step(int s, int a, Rng& rng) const;

  /// V*_1 .. V*_{H+1} under the true kernel.
  VTables optimal_values() const;
  QTables optimal_q() const;

  /// Exact value at s_1 of the policy greedy in `q` (ties to the lowest action).
  double policy_value(const QTables& q) const;

  /// One episode of the greedy policy. Throws InvariantViolation if the
  /// rewards sum past 1.
  EpisodeTrace rollout(const QTables& q, Rng& rng) const;

  void write_text(std::ostream& out) const;
  static MixtureMDP read_text(std::istream& in);

 private:
  int states_;
  int actions_;
  int horizon_;
  int initial_;
  std::vector<Eigen::MatrixXd> base_;
  Eigen::VectorXd theta_;
  Eigen::MatrixXd reward_;
  Eigen::MatrixXd kernel_;
};

int greedy_action(const Eigen::MatrixXd& q, int s);

/// Base-model family for the goal/sink instances.
struct MixtureInstanceSpec {
  int states = 8;
  int actions = 2;
  int dim = 3;
  int horizon = 10;
  int branching = 3;   // successors per row in the random sparse models
  bool drift = true;   // last base model moves s -> s + 1
  std::uint64_t seed = 0;
  std::optional<Eigen::VectorXd> theta_star;  // drawn from the simplex if unset
};

/// State S-1 is an absorbing zero-reward sink and S-2 a goal paying 1 for any
/// action before moving to the sink; everything else pays 0. Any trajectory
/// therefore collects at most 1. The agent-facing start state is 0.
MixtureMDP make_goal_instance(const MixtureInstanceSpec& spec);

}  // namespace vab
