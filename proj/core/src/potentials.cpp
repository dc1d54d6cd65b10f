#include "vab/potentials.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "vab/core.hpp"
#include "vab/errors.hpp"
#include "vab/rng.hpp"

namespace vab {
namespace {

void draw_ball(Rng& rng, Eigen::Ref<Eigen::VectorXd> out) {
  const int d = static_cast<int>(out.size());
  double n = 0.0;
  do {
    for (int k = 0; k < d; ++k) out[k] = rng.normal();
    n = out.norm();
  } while (n == 0.0);
  const double r = std::pow(rng.uniform(), 1.0 / d);
  out *= r / n;
  if (out.norm() > 1.0) out /= out.norm();
}

void draw_pair(Rng& rng, double floor, Eigen::Ref<Eigen::VectorXd> x,
               Eigen::Ref<Eigen::VectorXd> mu) {
  draw_ball(rng, x);
  do {
    draw_ball(rng, mu);
  } while (mu.norm() < floor);
}

double elliptical_summand(const Eigen::MatrixXd& gram, double level2,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& mu) {
  const double u = x.dot(mu);
  const double denom = mu.dot(gram * mu) + level2;
  return std::min(u * u / denom, 1.0);
}

double convex_summand(const Eigen::MatrixXd& xs, int count, double level,
                      const Eigen::VectorXd& x, const Eigen::VectorXd& mu) {
  double denom = level * level;
  for (int j = 0; j < count; ++j) {
    const double u = xs.col(j).dot(mu);
    denom += clip(u, level) * u;
  }
  const double c = clip(x.dot(mu), level);
  return c * c / denom;
}

}  // namespace

SequencePair::SequencePair(Eigen::MatrixXd xs, Eigen::MatrixXd mus, double level,
                           bool enforce_mu_floor)
    : xs_(std::move(xs)), mus_(std::move(mus)), level_(level) {
  if (xs_.rows() != mus_.rows() || xs_.cols() != mus_.cols())
    throw PreconditionError("SequencePair: sequences differ in shape");
  if (!(level_ > 0.0)) throw PreconditionError("SequencePair: level must be > 0");
  const double floor = enforce_mu_floor ? mu_floor(dim(), length()) : 0.0;
  for (int i = 0; i < length(); ++i) {
    if (xs_.col(i).norm() > 1.0 + 1e-12 || mus_.col(i).norm() > 1.0 + 1e-12)
      throw PreconditionError("SequencePair: vector outside the unit ball");
    if (mus_.col(i).norm() < floor)
      throw PreconditionError("SequencePair: mu below the norm floor");
  }
}

double mu_floor(int d, int t) {
  return 1.0 / (2.0 * std::sqrt(static_cast<double>(d)) * std::max(t, 1));
}

double convex_potential_sum(const SequencePair& sp) {
  const double l = sp.level();
  double total = 0.0;
  for (int i = 0; i < sp.length(); ++i) {
    double denom = l * l;
    for (int j = 0; j < i; ++j) {
      const double u = sp.x(j).dot(sp.mu(i));
      denom += clip(u, l) * u;
    }
    if (!(denom > 0.0)) throw NonPositiveDenominator(static_cast<std::size_t>(i));
    const double c = clip(sp.x(i).dot(sp.mu(i)), l);
    total += c * c / denom;
  }
  return total;
}

double convex_potential_sum_relaxed(const SequencePair& sp) {
  const double l = sp.level();
  double total = 0.0;
  for (int i = 0; i < sp.length(); ++i) {
    double denom = l * l;
    for (int j = 0; j < i; ++j) denom += f_ell(sp.x(j).dot(sp.mu(i)), l);
    const double c = clip(sp.x(i).dot(sp.mu(i)), l);
    total += c * c / denom;
  }
  return total;
}

double clipped_elliptical_sum(const SequencePair& sp) {
  const int d = sp.dim();
  const double l2 = sp.level() * sp.level();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  double total = 0.0;
  for (int i = 0; i < sp.length(); ++i) {
    const double u = sp.x(i).dot(sp.mu(i));
    const double denom = sp.mu(i).dot(gram * sp.mu(i)) + l2;
    total += std::min(u * u / denom, 1.0);
    gram.noalias() += sp.x(i) * sp.x(i).transpose();
  }
  return total;
}

int elliptical_indicator_count(const SequencePair& sp) {
  const int d = sp.dim();
  const double l2 = sp.level() * sp.level();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  int count = 0;
  for (int i = 0; i < sp.length(); ++i) {
    const double u = sp.x(i).dot(sp.mu(i));
    if (u * u > sp.mu(i).dot(gram * sp.mu(i)) + l2) ++count;
    gram.noalias() += sp.x(i) * sp.x(i).transpose();
  }
  return count;
}

double elliptical_bound(int d, int t, double level) {
  if (t < 2) throw PreconditionError("elliptical_bound: t must be >= 2");
  if (!(level > 0.0 && level <= 1.0))
    throw PreconditionError("elliptical_bound: level must lie in (0, 1]");
  return 4.0 * d * std::log(t / level);
}

SequencePair random_sequence(int d, int t, double level, std::uint64_t seed) {
  if (d < 1 || t < 1) throw PreconditionError("random_sequence: d and t must be >= 1");
  const double floor = mu_floor(d, t);
  Eigen::MatrixXd xs(d, t);
  Eigen::MatrixXd mus(d, t);
  for (int i = 0; i < t; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i), "sequence-step"));
    draw_pair(rng, floor, xs.col(i), mus.col(i));
  }
  return SequencePair(std::move(xs), std::move(mus), level, true);
}

SequencePair greedy_adversary(int d, int t, double level, int probe_count,
                              std::uint64_t seed, PotentialTarget target) {
  if (d < 1 || t < 1) throw PreconditionError("greedy_adversary: d and t must be >= 1");
  if (probe_count < 16) throw PreconditionError("greedy_adversary: probe_count must be >= 16");
  const double floor = mu_floor(d, t);
  const double l2 = level * level;
  Eigen::MatrixXd xs(d, t);
  Eigen::MatrixXd mus(d, t);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd x(d), mu(d);
  for (int i = 0; i < t; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i), "sequence-step"));
    double best = -1.0;
    for (int p = 0; p < probe_count; ++p) {
      draw_pair(rng, floor, x, mu);
      const double value = target == PotentialTarget::clipped_elliptical
                               ? elliptical_summand(gram, l2, x, mu)
                               : convex_summand(xs, i, level, x, mu);
      if (value > best) {
        best = value;
        xs.col(i) = x;
        mus.col(i) = mu;
      }
    }
    gram.noalias() += xs.col(i) * xs.col(i).transpose();
  }
  return SequencePair(std::move(xs), std::move(mus), level, true);
}

}  // namespace vab
