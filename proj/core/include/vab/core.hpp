#pragma once

#include <cmath>

namespace vab {

/// sign(u) * min(|u|, level); clip(0, level) == 0.
inline double clip(double u, double level) {
  if (u > level) return level;
  if (u < -level) return -level;
  return u;
}

/// Convex majorant of u -> clip(u, level) * u. Quadratic inside
/// [-level, level], linear with slope +-2*level outside.
inline double f_ell(double x, double level) {
  if (x > level) return 2.0 * level * x - level * level;
  if (x < -level) return -2.0 * level * x - level * level;
  return x * x;
}

/// Closed integer interval [first, last].
struct IndexRange {
  int first = 1;
  int last = 0;

  int size() const { return last >= first ? last - first + 1 : 0; }
  bool contains(int i) const { return i >= first && i <= last; }
};

/// Dyadic truncation levels level(i) = 2^(2-i) together with the moment,
/// variance-layer and clip-level index sets an agent iterates over.
class ClipLadder {
 public:
  /// Linear bandit ranges: clip levels {1, ..., ceil(log2 K) + 1}.
  static ClipLadder for_bandit(int rounds);

  /// Mixture-MDP ranges: moments {0..ceil(log2 H)}, variance layers and
  /// clip levels {1..ceil(5 log2(HK) + 3)}.
  static ClipLadder for_mixture(int horizon, int episodes);

  static double level(int i) { return std::ldexp(1.0, 2 - i); }

  const IndexRange& moments() const { return moments_; }
  const IndexRange& variance_layers() const { return variance_layers_; }
  const IndexRange& clip_levels() const { return clip_levels_; }

  /// Bucket index for variance layering: the unique i in variance_layers()
  /// with eta in (level(i+1), level(i)], or variance_layers().last + 1 when
  /// eta <= level(last + 1). Throws PreconditionError when eta < 0 and
  /// std::out_of_range when eta > level(1).
  int assign_layer(double eta) const;

  int overflow_layer() const { return variance_layers_.last + 1; }

 private:
  ClipLadder(IndexRange moments, IndexRange layers, IndexRange clips)
      : moments_(moments), variance_layers_(layers), clip_levels_(clips) {}

  IndexRange moments_;
  IndexRange variance_layers_;
  IndexRange clip_levels_;
};

/// Confidence width for the linear bandit agent,
/// scale * 60 d ln(dK/delta) (log2 log2 K)^2. Requires K >= 4.
double iota_bandit(int d, int rounds, double delta, double scale = 1.0);

/// Confidence width for the mixture-MDP agent, scale * 5 d ln(HK).
/// Requires HK >= 2.
double iota_mdp(int d, int horizon, int episodes, double scale = 1.0);

}  // namespace vab
