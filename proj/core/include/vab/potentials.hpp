#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace vab {

/// Two equal-length sequences of d-vectors (one per column) and a clip
/// level, the input of the sequential potential bounds.
class SequencePair {
 public:
  /// Validates lengths and ||x_i||, ||mu_i|| <= 1. When `enforce_mu_floor`
  /// is set, also requires ||mu_i|| >= 1 / (2 sqrt(d) t).
  SequencePair(Eigen::MatrixXd xs, Eigen::MatrixXd mus, double level,
               bool enforce_mu_floor = false);

  int dim() const { return static_cast<int>(xs_.rows()); }
  int length() const { return static_cast<int>(xs_.cols()); }
  double level() const { return level_; }
  auto x(int i) const { return xs_.col(i); }
  auto mu(int i) const { return mus_.col(i); }
  const Eigen::MatrixXd& xs() const { return xs_; }
  const Eigen::MatrixXd& mus() const { return mus_; }

 private:
  Eigen::MatrixXd xs_;
  Eigen::MatrixXd mus_;
  double level_;
};

/// Lower norm bound 1 / (2 sqrt(d) t) on the mu sequence.
double mu_floor(int d, int t);

/// sum_i clip^2(x_i mu_i, l) / (sum_{j<i} clip(x_j mu_i, l) x_j mu_i + l^2).
/// Throws NonPositiveDenominator if a denominator is not positive.
double convex_potential_sum(const SequencePair& sp);

/// Same sum with f_l(x_j mu_i) in place of clip(x_j mu_i, l) x_j mu_i in
/// each denominator.
double convex_potential_sum_relaxed(const SequencePair& sp);

/// sum_i min{ (x_i mu_i)^2 / (sum_{j<i} (x_j mu_i)^2 + l^2), 1 }, evaluated
/// through the running Gram matrix sum_{j<i} x_j x_j^T in O(t d^2).
double clipped_elliptical_sum(const SequencePair& sp);

/// Number of i with (x_i mu_i)^2 > sum_{j<i} (x_j mu_i)^2 + l^2.
int elliptical_indicator_count(const SequencePair& sp);

/// 4 d ln(t / l). Requires t >= 2 and l in (0, 1].
double elliptical_bound(int d, int t, double level);

enum class PotentialTarget { clipped_elliptical, convex };

/// Pairs drawn uniformly from the unit ball (mu by rejection above the
/// floor). Step i uses its own stream derived from (seed, i).
SequencePair random_sequence(int d, int t, double level, std::uint64_t seed);

/// Step-wise greedy stress sequence: at each step draws `probe_count` pairs
/// (the first is the pair random_sequence would draw at that step) and keeps
/// the one maximizing the current summand of `target`.
SequencePair greedy_adversary(int d, int t, double level, int probe_count,
                              std::uint64_t seed,
                              PotentialTarget target = PotentialTarget::clipped_elliptical);

}  // namespace vab
