#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "vab/core.hpp"
#include "vab/net.hpp"

namespace vab {

struct VofulConfig {
  int rounds = 1000;
  double delta = 0.01;
  double iota_scale = 1.0;
  /// Overrides the computed width when set.
  std::optional<double> iota;
};

/// Plain view of one (mu, j) accumulator.
struct VofulRecord {
  int count = 0;  // number of updates with a nonzero weight
  double s_c = 0.0;
  double s_y = 0.0;
  Eigen::VectorXd s_x;
  double q_yy = 0.0;
  Eigen::VectorXd q_xy;
  Eigen::MatrixXd q_xx;
};

struct VofulStep {
  int alive = 0;
  bool fallback = false;
  int removed = 0;
};

/// Linear bandit agent with variance-aware tested confidence sets over a
/// finite candidate set. One instance per run.
class VofulAgent {
 public:
  VofulAgent(ParameterCandidateSet candidates, DirectionNet net, const VofulConfig& config);

  int dim() const { return candidates_.dim(); }
  int round() const { return round_; }
  double iota() const { return iota_; }
  const ClipLadder& ladder() const { return ladder_; }
  const DirectionNet& net() const { return net_; }
  const ParameterCandidateSet& candidates() const { return candidates_; }
  bool in_fallback() const { return in_fallback_; }

  /// Column index of the optimistic action. Ties go to the lowest context,
  /// then the lowest candidate.
  int select_action(const Eigen::MatrixXd& contexts) const;

  /// Checks every (mu, j) constraint literally against the accumulators.
  bool membership(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

  /// Largest lhs / rhs over all constraints (<= 1 iff member).
  double violation_ratio(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

  /// Folds (x, y) into every accumulator and re-filters the candidates.
  VofulStep update(const Eigen::Ref<const Eigen::VectorXd>& x, double y);

  VofulRecord record(int mu, int j) const;

  /// (Phi, Psi) for net point `mu` and clip index j, Psi at theta_ref.
  std::pair<double, double> phi_psi(int mu, int j,
                                    const Eigen::Ref<const Eigen::VectorXd>& theta_ref) const;

  std::size_t accumulator_bytes() const;

 private:
  int column(int mu, int j) const;
  void features(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::Ref<Eigen::VectorXd> out) const;
  void filter();

  ParameterCandidateSet candidates_;
  DirectionNet net_;
  ClipLadder ladder_;
  double iota_;
  int round_ = 0;
  bool in_fallback_ = false;

  int nfeat_;                  // 1 + d + d(d+1)/2
  Eigen::MatrixXd lin_;        // (1 + d) x records: [s_y, -s_x]
  Eigen::MatrixXd quad_;       // nfeat x records, quadratic form coefficients
  Eigen::VectorXd s_c_;
  std::vector<int> count_;
  Eigen::VectorXd slack_;      // l_j * iota per record
  Eigen::MatrixXd cand_feat_;  // nfeat x candidates
  std::vector<int> active_;    // records that can bind (count > iota)
};

}  // namespace vab
