#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Core>

#include "vab/rng.hpp"

namespace vab {

/// Per-round noise standard deviation sigma_k.
struct SigmaSchedule {
  enum class Kind { constant, two_phase, per_round };

  Kind kind = Kind::constant;
  double first = 0.0;   // constant value, or the first-half value
  double second = 0.0;  // second-half value for two_phase
  std::vector<double> values;  // per_round, indexed by k - 1

  static SigmaSchedule constant(double s) { return {Kind::constant, s, s, {}}; }
  static SigmaSchedule two_phase(double a, double b) { return {Kind::two_phase, a, b, {}}; }
  static SigmaSchedule per_round(std::vector<double> v) {
    return {Kind::per_round, 0.0, 0.0, std::move(v)};
  }

  /// sigma_k for round k in [1, K].
  double at(int k, int rounds) const;
  double max() const;
  std::vector<double> distinct() const;
};

enum class NoiseKind { zero, scaled_rademacher, truncated_gaussian };
enum class ContextKind { fixed_arms, random_sphere };

struct BanditSpec {
  int d = 2;
  int rounds = 1000;
  Eigen::VectorXd theta_star;
  ContextKind contexts = ContextKind::random_sphere;
  Eigen::MatrixXd fixed_arms;  // d x n, used by fixed_arms
  int arms_per_round = 16;     // used by random_sphere
  NoiseKind noise = NoiseKind::scaled_rademacher;
  SigmaSchedule sigma = SigmaSchedule::constant(0.1);
  std::uint64_t seed = 0;
};

/// Linear bandit with rewards x theta* + eps_k, E[eps_k] = 0,
/// Var[eps_k] = sigma_k^2 and |reward| <= 1 surely. Immutable.
class BanditInstance {
 public:
  explicit BanditInstance(BanditSpec spec);

  int dim() const { return spec_.d; }
  int rounds() const { return spec_.rounds; }
  const Eigen::VectorXd& theta_star() const { return spec_.theta_star; }
  const BanditSpec& spec() const { return spec_; }

  /// Round-k action set, one context per column; a pure function of the
  /// instance seed and k.
  Eigen::MatrixXd sample_contexts(int k) const;

  /// Noisy reward for context `x`. Throws PreconditionError when `x` is not
  /// one of round k's contexts.
  double pull(const Eigen::VectorXd& x, int k, Rng& rng) const;
  /// Noisy reward for column `arm` of an already sampled context set.
  double pull_arm(const Eigen::MatrixXd& contexts, int arm, int k, Rng& rng) const;

  /// max_{x' in A_k} x' theta* - x theta*. Same membership rule as pull.
  double instant_regret(const Eigen::VectorXd& x, int k) const;
  double instant_regret_arm(const Eigen::MatrixXd& contexts, int arm) const;

  double sigma(int k) const { return spec_.sigma.at(k, spec_.rounds); }
  /// Draws eps_k.
  double noise(int k, Rng& rng) const;

 private:
  int find_context(const Eigen::MatrixXd& contexts, const Eigen::VectorXd& x) const;

  BanditSpec spec_;
  double truncation_ = 1.0;
  std::map<double, double> gaussian_scale_;  // sigma -> pre-truncation scale
};

/// Variance of N(0, s^2) truncated to [-c, c].
double truncated_normal_variance(double s, double c);

/// Scale s whose truncation to [-c, c] has standard deviation sigma.
/// Requires 0 < sigma^2 < c^2 / 3.
double truncated_normal_scale(double sigma, double c);

}  // namespace vab
