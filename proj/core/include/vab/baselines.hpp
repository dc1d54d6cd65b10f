#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "vab/mdp_env.hpp"
#include "vab/varlin.hpp"

namespace vab {

struct RidgeConfig {
  double lambda = 1.0;
  double delta = 0.01;
  double norm_bound = 1.0;   // S, bound on ||theta*||
  double noise_scale = 1.0;  // R, sub-Gaussian scale of the noise
  /// Fixed radius instead of the self-normalized schedule when set.
  std::optional<double> beta;
};

/// Ridge regression state: Gram = lambda I + sum x x^T, moment = sum x y.
class RidgeState {
 public:
  RidgeState(int d, const RidgeConfig& config);

  int dim() const { return static_cast<int>(moment_.size()); }
  int count() const { return count_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  const Eigen::VectorXd& moment() const { return moment_; }
  const Eigen::VectorXd& estimate() const { return estimate_; }

  /// sqrt(lambda) S + R sqrt(2 ln(1/delta) + d ln(1 + n / (lambda d))).
  double beta() const;
  /// ||x|| in the inverse Gram norm.
  double width(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Throws InvariantViolation if the Gram matrix stops being positive definite.
  void update(const Eigen::Ref<const Eigen::VectorXd>& x, double y);

 private:
  RidgeConfig config_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd moment_;
  Eigen::VectorXd estimate_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  int count_ = 0;
};

/// Optimistic linear bandit agent over the ridge ellipsoid.
class OfulAgent {
 public:
  OfulAgent(int d, const RidgeConfig& config) : ridge_(d, config) {}

  /// argmax of x theta_hat + beta ||x||_{Gram^-1}; ties to the lowest index.
  int select_action(const Eigen::MatrixXd& contexts) const;
  void update(const Eigen::Ref<const Eigen::VectorXd>& x, double y) { ridge_.update(x, y); }
  const RidgeState& ridge() const { return ridge_; }

 private:
  RidgeState ridge_;
};

struct HoeffdingEpisode {
  EpisodeTrace trace;
  QTables q;
};

/// Value-targeted regression with a Hoeffding-style bonus: regresses realized
/// V_{h+1}(s') onto the features [P_i V_{h+1}]_i.
class HoeffdingVtrAgent {
 public:
  HoeffdingVtrAgent(BaseModelSet models, const RidgeConfig& config);

  /// Q_h = clamp(r + x theta_hat + beta ||x||_{Gram^-1}, 0, 1).
  void plan(QTables& q, VTables& v) const;
  HoeffdingEpisode run_episode(const VarlinAgent::StepFn& env);
  const RidgeState& ridge() const { return ridge_; }

 private:
  BaseModelSet models_;
  RidgeState ridge_;
};

}  // namespace vab
