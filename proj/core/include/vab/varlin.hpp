#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "vab/core.hpp"
#include "vab/mdp_env.hpp"
#include "vab/net.hpp"

namespace vab {

/// What the agent knows about the environment: everything except theta*.
struct BaseModelSet {
  int states = 0;
  int actions = 0;
  int horizon = 0;
  int initial_state = 0;
  std::vector<Eigen::MatrixXd> base;  // (S*A) x S each
  Eigen::MatrixXd reward;             // S x A

  static BaseModelSet from(const MixtureMDP& mdp);
  int dim() const { return static_cast<int>(base.size()); }
  /// Row s*A + a, column i: P_i(. | s, a) v.
  Eigen::MatrixXd expectations(const Eigen::VectorXd& v) const;
  /// d-vector [P_i(. | s, a) v]_i.
  Eigen::VectorXd expectation_row(int s, int a, const Eigen::VectorXd& v) const;
};

struct VarlinConfig {
  int episodes = 200;
  double iota_scale = 1.0;
  std::optional<double> iota;
  /// Whether the lowest-variance overflow bucket is constrained too.
  bool constrain_overflow = true;
  /// Oracle-mode diagnostics that need theta*.
  std::optional<Eigen::VectorXd> theta_star;
  bool indicators = false;
};

/// Everything recorded for one step (k, h): moment features x^0..x^{L0+1},
/// and for each m in the moment range the target V(s')^(2^m), the variance
/// estimate and its layer.
struct VarlinStep {
  int state = 0;
  int action = 0;
  int next_state = 0;
  std::vector<Eigen::VectorXd> x;
  std::vector<double> target;
  std::vector<double> eta;
  std::vector<int> layer;
};

struct VarlinEpisode {
  EpisodeTrace trace;
  QTables q;  // the tables the episode acted on
  std::vector<VarlinStep> steps;
  int alive = 0;
  bool fallback = false;
  int removed = 0;
  int negative_eta = 0;             // steps whose raw variance maximum was < 0
  std::optional<int> indicator_drops;
  std::vector<int> indicators;      // I_1..I_H when computed
};

struct VarlinRecord {
  int count = 0;
  double s_t = 0.0;
  Eigen::VectorXd s_x;
  double w = 0.0;
};

/// Episodic agent for linear mixture MDPs with variance-layered tested
/// confidence sets over a finite candidate set.
class VarlinAgent {
 public:
  using StepFn = std::function<int(int state, int action)>;

  VarlinAgent(BaseModelSet models, ParameterCandidateSet candidates, DirectionNet net,
              const VarlinConfig& config);

  int dim() const { return models_.dim(); }
  int episode() const { return episode_; }
  double iota() const { return iota_; }
  const ClipLadder& ladder() const { return ladder_; }
  const DirectionNet& net() const { return net_; }
  const ParameterCandidateSet& candidates() const { return candidates_; }
  const BaseModelSet& models() const { return models_; }
  bool in_fallback() const { return in_fallback_; }

  /// Optimistic backward induction over the alive candidates; entry h-1 of
  /// each table is step h, values clamped into [0, 1].
  void plan(QTables& q, VTables& v) const;

  /// max over alive theta of theta x_next - (theta x_m)^2, clamped at 0.
  double variance_estimate(const Eigen::VectorXd& x_m, const Eigen::VectorXd& x_next,
                           bool* negative = nullptr) const;

  /// Plans, acts for H steps through `env`, then folds the episode into the
  /// accumulators and re-filters the candidates.
  VarlinEpisode run_episode(const StepFn& env);

  bool membership(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
  double violation_ratio(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

  /// Zero record when the (m, i) block is still empty.
  VarlinRecord record(int m, int i, int j, int mu) const;
  /// (Phi, Psi) for net point `mu` in block (m, i) at clip index j.
  std::pair<double, double> phi_psi(int m, int i, int j, int mu) const;

  int block_count() const { return static_cast<int>(blocks_.size()); }
  std::size_t accumulator_bytes() const;

 private:
  struct Block {
    int count = 0;  // entries with a nonzero feature vector
    std::vector<double> min_abs;
    std::vector<double> max_abs;
    Eigen::MatrixXd s_x;  // d x (net * L2)
    Eigen::VectorXd s_t;
    Eigen::VectorXd w;
    std::vector<double> history;  // raw x vectors, indicator mode only
  };

  int key(int m, int i) const { return m * (ladder_.overflow_layer() + 1) + i; }
  int column(int mu, int j) const { return mu * ladder_.clip_levels().size() + (j - 1); }
  double rhs(const Block& b, int col, int j) const;
  bool constrained(int i) const { return constrain_overflow_ || i != ladder_.overflow_layer(); }
  void fold(const VarlinStep& step);
  void filter(const std::vector<int>& changed);
  void compute_indicators(VarlinEpisode& ep) const;
  Eigen::MatrixXd alive_matrix() const;

  BaseModelSet models_;
  ParameterCandidateSet candidates_;
  DirectionNet net_;
  ClipLadder ladder_;
  double iota_;
  bool constrain_overflow_;
  std::optional<Eigen::VectorXd> theta_star_;
  bool indicators_;
  int episode_ = 0;
  bool in_fallback_ = false;
  std::map<int, Block> blocks_;
};

}  // namespace vab
