#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace vab {

enum class NormKind { l2, l1 };

double norm(const Eigen::Ref<const Eigen::VectorXd>& v, NormKind kind);

/// Finite probe set standing in for a fine net of a norm ball. Points are
/// stored one per column.
struct DirectionNet {
  Eigen::MatrixXd points;
  double radius = 1.0;
  NormKind norm_kind = NormKind::l2;
  double resolution = 0.0;

  int dim() const { return static_cast<int>(points.rows()); }
  int size() const { return static_cast<int>(points.cols()); }
};

/// Deterministic quasi-random net of the radius-`radius` ball: the 2d signed
/// axis points first, then scrambled Halton points mapped into the ball,
/// skipping any point within resolution/4 of an accepted one, until
/// `max_points` are collected (or the attempt budget runs out).
DirectionNet make_net(int d, double radius, double resolution, NormKind kind,
                      std::uint64_t seed, int max_points);

/// Default probe count for a d-dimensional net.
inline int default_net_points(int d) { return 512 * d + 2 * d; }

/// Spacing heuristic: radius * n^(-1/d).
double default_resolution(int d, double radius, int points);

/// Finite candidate parameters with a monotone "alive" mask.
class ParameterCandidateSet {
 public:
  ParameterCandidateSet(Eigen::MatrixXd candidates, NormKind kind,
                        std::optional<int> injected = std::nullopt);

  int dim() const { return static_cast<int>(candidates_.rows()); }
  int size() const { return static_cast<int>(candidates_.cols()); }
  NormKind norm_kind() const { return kind_; }

  auto candidate(int i) const { return candidates_.col(i); }
  const Eigen::MatrixXd& matrix() const { return candidates_; }

  bool alive(int i) const { return alive_[static_cast<std::size_t>(i)] != 0; }
  int alive_count() const { return static_cast<int>(alive_indices_.size()); }
  std::span<const int> alive_indices() const { return alive_indices_; }

  /// Index of an injected oracle parameter, if one was added.
  std::optional<int> injected_index() const { return injected_; }

  /// Applies a kill mask (true = remove). Returns the number removed.
  int remove(std::span<const std::uint8_t> kill);
  /// Keeps exactly one candidate alive.
  void retain_only(int i);
  /// Replaces the alive mask wholesale (used when leaving a fallback).
  void assign(std::span<const std::uint8_t> alive);

  /// Coordinate-wise bounding box of the alive candidates.
  void alive_box(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const;

 private:
  void rebuild_index();

  Eigen::MatrixXd candidates_;
  NormKind kind_;
  std::vector<std::uint8_t> alive_;
  std::vector<int> alive_indices_;
  std::optional<int> injected_;
};

/// Candidate parameters filling the unit ball of `kind`: `count` net points
/// (axis points included), optionally followed by an injected parameter.
ParameterCandidateSet make_candidates(
    int d, int count, NormKind kind, std::uint64_t seed,
    const std::optional<Eigen::VectorXd>& inject = std::nullopt);

}  // namespace vab
