#include "vab/bandit_env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "vab/errors.hpp"

namespace vab {
namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace

double SigmaSchedule::at(int k, int rounds) const {
  switch (kind) {
    case Kind::constant: return first;
    case Kind::two_phase: return 2 * k <= rounds ? first : second;
    case Kind::per_round:
      if (k < 1 || k > static_cast<int>(values.size()))
        throw PreconditionError("SigmaSchedule: round outside the per-round list");
      return values[static_cast<std::size_t>(k - 1)];
  }
  return first;
}

double SigmaSchedule::max() const {
  if (kind == Kind::per_round)
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  return std::max(first, second);
}

std::vector<double> SigmaSchedule::distinct() const {
  std::vector<double> out = kind == Kind::per_round ? values : std::vector<double>{first, second};
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double truncated_normal_variance(double s, double c) {
  const double a = c / s;
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
  const double mass = 2.0 * normal_cdf(a) - 1.0;
  return s * s * (1.0 - 2.0 * a * phi / mass);
}

double truncated_normal_scale(double sigma, double c) {
  if (!(sigma > 0.0) || !(sigma * sigma < c * c / 3.0))
    throw PreconditionError("truncated_normal_scale: need 0 < sigma^2 < c^2/3");
  // Variance increases monotonically in s; bisect on log s.
  double lo = std::log(sigma) - 1.0;
  // Beyond ~150c the closed form cancels badly and the variance is c^2/3 anyway.
  double hi = std::log(c) + 5.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (truncated_normal_variance(std::exp(mid), c) < sigma * sigma)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

BanditInstance::BanditInstance(BanditSpec spec) : spec_(std::move(spec)) {
  const int d = spec_.d;
  if (d < 1) throw PreconditionError("BanditInstance: d must be >= 1");
  if (spec_.rounds < 1) throw PreconditionError("BanditInstance: K must be >= 1");
  if (spec_.theta_star.size() != d)
    throw PreconditionError("BanditInstance: theta* has wrong dimension");
  if (spec_.theta_star.norm() > 1.0 + 1e-12)
    throw PreconditionError("BanditInstance: ||theta*|| must be <= 1");

  // Largest possible |x theta*| over contexts this instance can produce.
  double mean_bound = spec_.theta_star.norm();
  if (spec_.contexts == ContextKind::fixed_arms) {
    if (spec_.fixed_arms.rows() != d || spec_.fixed_arms.cols() == 0)
      throw PreconditionError("BanditInstance: fixed arms must be a nonempty d x n matrix");
    mean_bound = 0.0;
    for (int a = 0; a < spec_.fixed_arms.cols(); ++a) {
      if (spec_.fixed_arms.col(a).norm() > 1.0 + 1e-12)
        throw PreconditionError("BanditInstance: context outside the unit ball");
      mean_bound = std::max(mean_bound, std::abs(spec_.fixed_arms.col(a).dot(spec_.theta_star)));
    }
  } else if (spec_.arms_per_round < 1) {
    throw PreconditionError("BanditInstance: arms_per_round must be >= 1");
  }
  if (spec_.sigma.kind == SigmaSchedule::Kind::per_round &&
      static_cast<int>(spec_.sigma.values.size()) < spec_.rounds)
    throw PreconditionError("BanditInstance: per-round sigma list shorter than K");
  for (const double s : spec_.sigma.distinct())
    if (s < 0.0) throw PreconditionError("BanditInstance: sigma must be >= 0");

  truncation_ = 1.0 - mean_bound;
  switch (spec_.noise) {
    case NoiseKind::zero: break;
    case NoiseKind::scaled_rademacher:
      if (mean_bound + spec_.sigma.max() > 1.0 + 1e-12)
        throw PreconditionError(
            "BanditInstance: scaled_rademacher needs |x theta*| + sigma_k <= 1");
      break;
    case NoiseKind::truncated_gaussian:
      for (const double s : spec_.sigma.distinct()) {
        if (s == 0.0) continue;
        gaussian_scale_[s] = truncated_normal_scale(s, truncation_);
      }
      break;
  }
}

Eigen::MatrixXd BanditInstance::sample_contexts(int k) const {
  if (k < 1 || k > spec_.rounds)
    throw PreconditionError("sample_contexts: round " + std::to_string(k) + " out of range");
  if (spec_.contexts == ContextKind::fixed_arms) return spec_.fixed_arms;
  Rng rng(derive_seed(spec_.seed, static_cast<std::uint64_t>(k), "contexts"));
  Eigen::MatrixXd out(spec_.d, spec_.arms_per_round);
  for (int a = 0; a < spec_.arms_per_round; ++a) {
    double n = 0.0;
    do {
      for (int i = 0; i < spec_.d; ++i) out(i, a) = rng.normal();
      n = out.col(a).norm();
    } while (n == 0.0);
    out.col(a) /= n;
    if (out.col(a).norm() > 1.0) out.col(a) /= out.col(a).norm();
  }
  return out;
}

double BanditInstance::noise(int k, Rng& rng) const {
  const double s = sigma(k);
  switch (spec_.noise) {
    case NoiseKind::zero: return 0.0;
    case NoiseKind::scaled_rademacher: return s * rng.sign();
    case NoiseKind::truncated_gaussian: {
      if (s == 0.0) return 0.0;
      const double scale = gaussian_scale_.at(s);
      const double edge = normal_cdf(-truncation_ / scale);
      const double u = rng.uniform(edge, 1.0 - edge);
      return std::clamp(scale * normal_quantile(u), -truncation_, truncation_);
    }
  }
  return 0.0;
}

int BanditInstance::find_context(const Eigen::MatrixXd& contexts,
                                 const Eigen::VectorXd& x) const {
  for (int a = 0; a < contexts.cols(); ++a)
    if (contexts.col(a) == x) return a;
  throw PreconditionError("pull: action is not in the round's context set");
}

double BanditInstance::pull(const Eigen::VectorXd& x, int k, Rng& rng) const {
  const Eigen::MatrixXd contexts = sample_contexts(k);
  return pull_arm(contexts, find_context(contexts, x), k, rng);
}

double BanditInstance::pull_arm(const Eigen::MatrixXd& contexts, int arm, int k,
                                Rng& rng) const {
  const double r = contexts.col(arm).dot(spec_.theta_star) + noise(k, rng);
  if (std::abs(r) > 1.0 + 1e-12)
    throw InvariantViolation("bandit reward " + std::to_string(r) + " exceeds 1 in magnitude");
  return r;
}

double BanditInstance::instant_regret(const Eigen::VectorXd& x, int k) const {
  const Eigen::MatrixXd contexts = sample_contexts(k);
  return instant_regret_arm(contexts, find_context(contexts, x));
}

double BanditInstance::instant_regret_arm(const Eigen::MatrixXd& contexts, int arm) const {
  const Eigen::VectorXd values = contexts.transpose() * spec_.theta_star;
  return values.maxCoeff() - values[arm];
}

}  // namespace vab
