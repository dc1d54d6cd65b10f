#pragma once

#include <cstdint>
#include <string>

#include "vab/rng.hpp"

namespace vab {

/// Increment processes used to exercise the martingale inequalities.
/// Every kind knows its conditional mean and second moment given the
/// running sum, so verifiers can evaluate the conditional-variance sides
/// of the bounds exactly.
enum class IncrementKind {
  zero,                // X_i = 0
  constant,            // X_i = value (in [0, 1]; not centered)
  rademacher,          // +-1
  centered_bernoulli,  // B - p, B ~ Bernoulli(p)
  sign_feedback,       // law depends on the sign of the running sum
  scaled_uniform,      // Uniform[-b, b]
  bernoulli,           // Bernoulli(p), in [0, 1]
  adaptive_bernoulli,  // Bernoulli(p_i), p_i depends on the running count
};

struct MartingaleSpec {
  IncrementKind kind = IncrementKind::rademacher;
  int n = 0;
  /// p for the Bernoulli kinds, b for scaled_uniform, value for constant.
  double param = 0.0;

  static MartingaleSpec zero(int n) { return {IncrementKind::zero, n, 0.0}; }
  static MartingaleSpec constant(int n, double v) { return {IncrementKind::constant, n, v}; }
  static MartingaleSpec rademacher(int n) { return {IncrementKind::rademacher, n, 0.0}; }
  static MartingaleSpec centered_bernoulli(int n, double p) {
    return {IncrementKind::centered_bernoulli, n, p};
  }
  static MartingaleSpec sign_feedback(int n) { return {IncrementKind::sign_feedback, n, 0.0}; }
  static MartingaleSpec scaled_uniform(int n, double b) {
    return {IncrementKind::scaled_uniform, n, b};
  }
  static MartingaleSpec bernoulli(int n, double p) { return {IncrementKind::bernoulli, n, p}; }
  static MartingaleSpec adaptive_bernoulli(int n, double p) {
    return {IncrementKind::adaptive_bernoulli, n, p};
  }

  /// Almost-sure bound b on |X_i|. The zero process reports b = 1.
  double bound() const;
  /// E[X_i | F_{i-1}] = 0 for every i.
  bool centered() const;
  /// X_i in [0, 1] surely.
  bool unit_interval() const;
  std::string name() const;
};

struct IncrementDraw {
  double value = 0.0;
  double cond_mean = 0.0;
  double cond_second_moment = 0.0;
};

/// One increment given the running sum of previous increments.
IncrementDraw draw_increment(const MartingaleSpec& spec, double running_sum, Rng& rng);

struct VerifierReport {
  long trials = 0;
  long failures = 0;
  double failure_rate = 0.0;
  double stated_bound = 0.0;
  bool bound_vacuous = false;
  double rhs_percentile_95 = 0.0;

  /// failure_rate <= stated_bound + 3 sqrt(stated_bound / trials), or the
  /// stated bound is vacuous.
  bool within_bound() const;
};

/// m = ceil(log2 log2 n) for n >= 4.
int bernstein_layers(int n);

/// (8 sqrt(sum_sq ln(1/delta)) + 60 b ln(1/delta)) * ceil(log2 log2 n).
/// Requires n >= 4, delta < e^-2, b > 0, sum_sq >= 0.
double empirical_bernstein_rhs(double sum_sq, double b, double delta, int n);

/// Failure: |sum X_i| exceeds the empirical Bernstein width evaluated at the
/// trial's realized sum of squares. Stated bound 8 delta m log2 n.
VerifierReport verify_empirical_bernstein(const MartingaleSpec& spec, double delta,
                                          long trials, std::uint64_t seed);

/// Failure: sum X_i^2 >= 8 sum E[X_i^2 | F] + 4 ln(4/delta).
/// Stated bound (ceil(log2 n) + 1) delta. Requires |X_i| <= 1.
VerifierReport verify_second_moment_bound(const MartingaleSpec& spec, double delta,
                                          long trials, std::uint64_t seed);

/// Failure: some prefix has sum X_i >= 4c ln(4/delta) while
/// sum E[X_i | F] <= c ln(4/delta). Stated bound delta. Requires X_i in [0, 1].
VerifierReport verify_upper_tail(const MartingaleSpec& spec, double c, double delta,
                                 long trials, std::uint64_t seed);

/// Failure: |M_n| >= 2 sqrt(2 Var_n ln(1/delta)) + 2 sqrt(eps ln(1/delta))
/// + 2 b ln(1/delta). Stated bound 2 (log2(b^2 n / eps) + 1) delta.
VerifierReport verify_freedman(const MartingaleSpec& spec, double delta, double eps,
                               long trials, std::uint64_t seed);

/// Failure: |M_n| >= b sqrt(2 n ln(2/delta)). Stated bound delta.
VerifierReport verify_azuma(const MartingaleSpec& spec, double delta, long trials,
                            std::uint64_t seed);

}  // namespace vab
