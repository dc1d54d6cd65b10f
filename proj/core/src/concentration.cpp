#include "vab/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vab/errors.hpp"

namespace vab {
namespace {

void require_trials(long trials) {
  if (trials < 1000) throw PreconditionError("verifier: trials must be >= 1000");
}

void require_length(const MartingaleSpec& spec) {
  if (spec.n < 1) throw PreconditionError("verifier: n must be >= 1");
}

void require_centered(const MartingaleSpec& spec) {
  if (!spec.centered())
    throw PreconditionError("verifier: " + spec.name() + " is not a martingale difference sequence");
}

struct PathSums {
  double sum = 0.0;
  double sum_sq = 0.0;
  double cond_mean = 0.0;
  double cond_second = 0.0;
};

// Per-trial streams make the result independent of evaluation order.
template <typename StepFn>
void simulate_path(const MartingaleSpec& spec, std::uint64_t seed, long trial,
                   PathSums& sums, StepFn&& on_step) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial), "martingale-trial"));
  sums = {};
  for (int i = 0; i < spec.n; ++i) {
    const IncrementDraw x = draw_increment(spec, sums.sum, rng);
    sums.sum += x.value;
    sums.sum_sq += x.value * x.value;
    sums.cond_mean += x.cond_mean;
    sums.cond_second += x.cond_second_moment;
    on_step(sums);
  }
}

VerifierReport finish(long trials, long failures, double stated, std::vector<double>& rhs) {
  VerifierReport r;
  r.trials = trials;
  r.failures = failures;
  r.failure_rate = static_cast<double>(failures) / static_cast<double>(trials);
  r.stated_bound = stated;
  r.bound_vacuous = stated >= 1.0;
  if (!rhs.empty()) {
    const auto k = static_cast<std::size_t>(0.95 * static_cast<double>(rhs.size() - 1));
    std::nth_element(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(k), rhs.end());
    r.rhs_percentile_95 = rhs[k];
  }
  return r;
}

}  // namespace

double MartingaleSpec::bound() const {
  switch (kind) {
    case IncrementKind::zero: return 1.0;
    case IncrementKind::constant: return std::abs(param);
    case IncrementKind::rademacher: return 1.0;
    case IncrementKind::centered_bernoulli: return std::max(param, 1.0 - param);
    case IncrementKind::sign_feedback: return 1.0;
    case IncrementKind::scaled_uniform: return param;
    case IncrementKind::bernoulli: return 1.0;
    case IncrementKind::adaptive_bernoulli: return 1.0;
  }
  return 1.0;
}

bool MartingaleSpec::centered() const {
  switch (kind) {
    case IncrementKind::zero:
    case IncrementKind::rademacher:
    case IncrementKind::centered_bernoulli:
    case IncrementKind::sign_feedback:
    case IncrementKind::scaled_uniform:
      return true;
    case IncrementKind::constant: return param == 0.0;
    case IncrementKind::bernoulli:
    case IncrementKind::adaptive_bernoulli:
      return false;
  }
  return false;
}

bool MartingaleSpec::unit_interval() const {
  switch (kind) {
    case IncrementKind::zero:
    case IncrementKind::bernoulli:
    case IncrementKind::adaptive_bernoulli:
      return true;
    case IncrementKind::constant: return param >= 0.0 && param <= 1.0;
    default: return false;
  }
}

std::string MartingaleSpec::name() const {
  switch (kind) {
    case IncrementKind::zero: return "zero";
    case IncrementKind::constant: return "constant";
    case IncrementKind::rademacher: return "rademacher";
    case IncrementKind::centered_bernoulli: return "centered_bernoulli";
    case IncrementKind::sign_feedback: return "sign_feedback";
    case IncrementKind::scaled_uniform: return "scaled_uniform";
    case IncrementKind::bernoulli: return "bernoulli";
    case IncrementKind::adaptive_bernoulli: return "adaptive_bernoulli";
  }
  return "unknown";
}

IncrementDraw draw_increment(const MartingaleSpec& spec, double running_sum, Rng& rng) {
  const double p = spec.param;
  switch (spec.kind) {
    case IncrementKind::zero: return {0.0, 0.0, 0.0};
    case IncrementKind::constant: return {p, p, p * p};
    case IncrementKind::rademacher: return {rng.sign(), 0.0, 1.0};
    case IncrementKind::centered_bernoulli:
      return {(rng.bernoulli(p) ? 1.0 : 0.0) - p, 0.0, p * (1.0 - p)};
    case IncrementKind::sign_feedback: {
      // Mean zero either way: -1/2 w.p. 2/3 and +1 w.p. 1/3 when the sum is
      // nonnegative, mirrored otherwise.
      const double dir = running_sum >= 0.0 ? 1.0 : -1.0;
      const double x = rng.uniform() < 2.0 / 3.0 ? -0.5 * dir : dir;
      return {x, 0.0, 0.5};
    }
    case IncrementKind::scaled_uniform: return {rng.uniform(-p, p), 0.0, p * p / 3.0};
    case IncrementKind::bernoulli: {
      const double x = rng.bernoulli(p) ? 1.0 : 0.0;
      return {x, p, p};
    }
    case IncrementKind::adaptive_bernoulli: {
      const bool even = std::fmod(running_sum, 2.0) == 0.0;
      const double pi = even ? 1.5 * p : 0.5 * p;
      const double x = rng.bernoulli(pi) ? 1.0 : 0.0;
      return {x, pi, pi};
    }
  }
  return {};
}

bool VerifierReport::within_bound() const {
  if (bound_vacuous) return true;
  return failure_rate <=
         stated_bound + 3.0 * std::sqrt(stated_bound / static_cast<double>(trials));
}

int bernstein_layers(int n) {
  if (n < 4) throw PreconditionError("bernstein_layers: n must be >= 4");
  return static_cast<int>(std::ceil(std::log2(std::log2(static_cast<double>(n)))));
}

double empirical_bernstein_rhs(double sum_sq, double b, double delta, int n) {
  if (n < 4) throw PreconditionError("empirical_bernstein_rhs: n must be >= 4");
  if (!(delta > 0.0 && delta < std::exp(-2.0)))
    throw PreconditionError("empirical_bernstein_rhs: delta must lie in (0, e^-2)");
  if (!(b > 0.0)) throw PreconditionError("empirical_bernstein_rhs: b must be > 0");
  if (!(sum_sq >= 0.0)) throw PreconditionError("empirical_bernstein_rhs: sum_sq must be >= 0");
  const double log_inv = std::log(1.0 / delta);
  return (8.0 * std::sqrt(sum_sq * log_inv) + 60.0 * b * log_inv) * bernstein_layers(n);
}

VerifierReport verify_empirical_bernstein(const MartingaleSpec& spec, double delta,
                                          long trials, std::uint64_t seed) {
  require_trials(trials);
  require_centered(spec);
  const double b = spec.bound();
  const int m = bernstein_layers(spec.n);
  // Validates delta and b up front.
  (void)empirical_bernstein_rhs(0.0, b, delta, spec.n);
  long failures = 0;
  std::vector<double> rhs(static_cast<std::size_t>(trials));
  PathSums sums;
  for (long t = 0; t < trials; ++t) {
    simulate_path(spec, seed, t, sums, [](const PathSums&) {});
    const double width = empirical_bernstein_rhs(sums.sum_sq, b, delta, spec.n);
    rhs[static_cast<std::size_t>(t)] = width;
    if (std::abs(sums.sum) > width) ++failures;
  }
  const double stated = 8.0 * delta * m * std::log2(static_cast<double>(spec.n));
  return finish(trials, failures, stated, rhs);
}

VerifierReport verify_second_moment_bound(const MartingaleSpec& spec, double delta,
                                          long trials, std::uint64_t seed) {
  require_trials(trials);
  require_length(spec);
  if (spec.bound() > 1.0)
    throw PreconditionError("verify_second_moment_bound: increments must satisfy |X| <= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw PreconditionError("verify_second_moment_bound: delta must lie in (0, 1)");
  const double slack = 4.0 * std::log(4.0 / delta);
  long failures = 0;
  std::vector<double> rhs(static_cast<std::size_t>(trials));
  PathSums sums;
  for (long t = 0; t < trials; ++t) {
    simulate_path(spec, seed, t, sums, [](const PathSums&) {});
    const double bound = 8.0 * sums.cond_second + slack;
    rhs[static_cast<std::size_t>(t)] = bound;
    if (sums.sum_sq >= bound) ++failures;
  }
  const double stated =
      (std::ceil(std::log2(static_cast<double>(spec.n))) + 1.0) * delta;
  return finish(trials, failures, stated, rhs);
}

VerifierReport verify_upper_tail(const MartingaleSpec& spec, double c, double delta,
                                 long trials, std::uint64_t seed) {
  require_trials(trials);
  require_length(spec);
  if (!spec.unit_interval())
    throw PreconditionError("verify_upper_tail: increments must lie in [0, 1]");
  if (!(c >= 1.0)) throw PreconditionError("verify_upper_tail: c must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw PreconditionError("verify_upper_tail: delta must lie in (0, 1)");
  const double log_term = std::log(4.0 / delta);
  const double high = 4.0 * c * log_term;
  const double low = c * log_term;
  long failures = 0;
  std::vector<double> rhs(static_cast<std::size_t>(trials), high);
  PathSums sums;
  for (long t = 0; t < trials; ++t) {
    bool failed = false;
    simulate_path(spec, seed, t, sums, [&](const PathSums& s) {
      if (s.sum >= high && s.cond_mean <= low) failed = true;
    });
    if (failed) ++failures;
  }
  return finish(trials, failures, delta, rhs);
}

VerifierReport verify_freedman(const MartingaleSpec& spec, double delta, double eps,
                               long trials, std::uint64_t seed) {
  require_trials(trials);
  require_length(spec);
  require_centered(spec);
  if (!(eps > 0.0)) throw PreconditionError("verify_freedman: eps must be > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw PreconditionError("verify_freedman: delta must lie in (0, 1)");
  const double b = spec.bound();
  const double log_inv = std::log(1.0 / delta);
  long failures = 0;
  std::vector<double> rhs(static_cast<std::size_t>(trials));
  PathSums sums;
  for (long t = 0; t < trials; ++t) {
    simulate_path(spec, seed, t, sums, [](const PathSums&) {});
    // Centered increments: conditional variance equals the second moment.
    const double width = 2.0 * std::sqrt(2.0 * sums.cond_second * log_inv) +
                         2.0 * std::sqrt(eps * log_inv) + 2.0 * b * log_inv;
    rhs[static_cast<std::size_t>(t)] = width;
    if (std::abs(sums.sum) >= width) ++failures;
  }
  const double stated =
      2.0 * (std::log2(b * b * spec.n / eps) + 1.0) * delta;
  return finish(trials, failures, stated, rhs);
}

VerifierReport verify_azuma(const MartingaleSpec& spec, double delta, long trials,
                            std::uint64_t seed) {
  require_trials(trials);
  require_length(spec);
  require_centered(spec);
  if (!(delta > 0.0 && delta < 1.0))
    throw PreconditionError("verify_azuma: delta must lie in (0, 1)");
  const double width =
      spec.bound() * std::sqrt(2.0 * spec.n * std::log(2.0 / delta));
  long failures = 0;
  std::vector<double> rhs(static_cast<std::size_t>(trials), width);
  PathSums sums;
  for (long t = 0; t < trials; ++t) {
    simulate_path(spec, seed, t, sums, [](const PathSums&) {});
    if (std::abs(sums.sum) >= width) ++failures;
  }
  return finish(trials, failures, delta, rhs);
}

}  // namespace vab
