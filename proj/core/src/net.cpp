#include "vab/net.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "vab/errors.hpp"
#include "vab/rng.hpp"

namespace vab {
namespace {

constexpr std::array<int, 40> kPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,
    47,  53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107,
    109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173};

double radical_inverse(std::uint64_t n, int base) {
  const double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (n > 0) {
    r += f * static_cast<double>(n % static_cast<std::uint64_t>(base));
    n /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

// Halton sequence with a Cranley-Patterson rotation; coordinates stay in
// the open interval (0, 1) so the inverse-CDF maps below are finite.
class ScrambledHalton {
 public:
  ScrambledHalton(int dims, std::uint64_t seed) : shift_(dims) {
    if (dims > static_cast<int>(kPrimes.size()))
      throw PreconditionError("make_net: dimension too large for Halton bases");
    Rng rng(derive_seed(seed, 0, "halton"));
    for (auto& s : shift_) s = rng.uniform();
  }

  void next(std::vector<double>& out) {
    ++index_;
    out.resize(shift_.size());
    for (std::size_t k = 0; k < shift_.size(); ++k) {
      double u = radical_inverse(index_, kPrimes[k]) + shift_[k];
      u -= std::floor(u);
      out[k] = std::clamp(u, 1e-12, 1.0 - 1e-12);
    }
  }

 private:
  std::vector<double> shift_;
  std::uint64_t index_ = 0;
};

void clamp_to_ball(Eigen::Ref<Eigen::VectorXd> v, double radius, NormKind kind) {
  for (int guard = 0; guard < 4; ++guard) {
    const double n = norm(v, kind);
    if (n <= radius) return;
    v *= radius / n;
  }
  v *= std::nextafter(1.0, 0.0);
}

// Uniform-in-volume map from the cube to the ball.
void map_to_ball(const std::vector<double>& u, int d, double radius,
                 NormKind kind, Eigen::Ref<Eigen::VectorXd> out) {
  const double r = radius * std::pow(u[static_cast<std::size_t>(d)], 1.0 / d);
  if (kind == NormKind::l2) {
    for (int i = 0; i < d; ++i)
      out[i] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u[static_cast<std::size_t>(i)] - 1.0);
    const double n = out.norm();
    out *= (n > 0.0) ? r / n : 0.0;
  } else {
    // Exponential spacings give a uniform point on the simplex; independent
    // signs spread it over the l1 sphere.
    double total = 0.0;
    for (int i = 0; i < d; ++i) {
      out[i] = -std::log(u[static_cast<std::size_t>(i)]);
      total += out[i];
    }
    for (int i = 0; i < d; ++i) {
      const double sign = u[static_cast<std::size_t>(d + 1 + i)] < 0.5 ? -1.0 : 1.0;
      out[i] = sign * r * out[i] / total;
    }
  }
  clamp_to_ball(out, radius, kind);
}

}  // namespace

double norm(const Eigen::Ref<const Eigen::VectorXd>& v, NormKind kind) {
  return kind == NormKind::l2 ? v.norm() : v.lpNorm<1>();
}

double default_resolution(int d, double radius, int points) {
  return radius * std::pow(static_cast<double>(std::max(points, 1)), -1.0 / d);
}

DirectionNet make_net(int d, double radius, double resolution, NormKind kind,
                      std::uint64_t seed, int max_points) {
  if (d < 1) throw PreconditionError("make_net: d must be >= 1");
  if (!(radius > 0.0)) throw PreconditionError("make_net: radius must be > 0");
  if (!(resolution > 0.0))
    throw PreconditionError("make_net: resolution must be > 0");
  if (max_points < 2 * d)
    throw PreconditionError("make_net: max_points must be >= 2d");

  DirectionNet net;
  net.radius = radius;
  net.norm_kind = kind;
  net.resolution = resolution;
  net.points.resize(d, max_points);

  int count = 0;
  for (int i = 0; i < d; ++i) {
    for (const double s : {1.0, -1.0}) {
      net.points.col(count).setZero();
      net.points(i, count) = s * radius;
      ++count;
    }
  }

  const double min_gap = resolution / 4.0;
  const int dims = kind == NormKind::l2 ? d + 1 : 2 * d + 1;
  ScrambledHalton halton(dims, seed);
  std::vector<double> u;
  Eigen::VectorXd p(d);
  const long budget = 64L * max_points;
  for (long attempt = 0; attempt < budget && count < max_points; ++attempt) {
    halton.next(u);
    map_to_ball(u, d, radius, kind, p);
    bool fresh = true;
    for (int k = 0; k < count && fresh; ++k)
      fresh = norm(net.points.col(k) - p, kind) >= min_gap;
    if (fresh) net.points.col(count++) = p;
  }
  net.points.conservativeResize(d, count);
  return net;
}

ParameterCandidateSet::ParameterCandidateSet(Eigen::MatrixXd candidates,
                                             NormKind kind,
                                             std::optional<int> injected)
    : candidates_(std::move(candidates)),
      kind_(kind),
      alive_(static_cast<std::size_t>(candidates_.cols()), 1),
      injected_(injected) {
  if (candidates_.cols() == 0)
    throw PreconditionError("ParameterCandidateSet: no candidates");
  for (int i = 0; i < size(); ++i) {
    if (norm(candidates_.col(i), kind_) > 1.0 + 1e-12)
      throw PreconditionError("ParameterCandidateSet: candidate outside unit ball");
  }
  rebuild_index();
}

int ParameterCandidateSet::remove(std::span<const std::uint8_t> kill) {
  int removed = 0;
  for (std::size_t i = 0; i < alive_.size() && i < kill.size(); ++i) {
    if (alive_[i] && kill[i]) {
      alive_[i] = 0;
      ++removed;
    }
  }
  if (removed > 0) rebuild_index();
  return removed;
}

void ParameterCandidateSet::retain_only(int i) {
  std::fill(alive_.begin(), alive_.end(), 0);
  alive_[static_cast<std::size_t>(i)] = 1;
  rebuild_index();
}

void ParameterCandidateSet::assign(std::span<const std::uint8_t> alive) {
  if (alive.size() != alive_.size())
    throw PreconditionError("ParameterCandidateSet::assign: mask size mismatch");
  alive_.assign(alive.begin(), alive.end());
  rebuild_index();
}

void ParameterCandidateSet::alive_box(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const {
  lo.setConstant(dim(), std::numeric_limits<double>::infinity());
  hi.setConstant(dim(), -std::numeric_limits<double>::infinity());
  for (const int i : alive_indices_) {
    lo = lo.cwiseMin(candidates_.col(i));
    hi = hi.cwiseMax(candidates_.col(i));
  }
}

void ParameterCandidateSet::rebuild_index() {
  alive_indices_.clear();
  for (std::size_t i = 0; i < alive_.size(); ++i)
    if (alive_[i]) alive_indices_.push_back(static_cast<int>(i));
}

ParameterCandidateSet make_candidates(int d, int count, NormKind kind,
                                      std::uint64_t seed,
                                      const std::optional<Eigen::VectorXd>& inject) {
  DirectionNet net = make_net(d, 1.0, default_resolution(d, 1.0, count), kind,
                              derive_seed(seed, 0, "candidates"), count);
  if (!inject) return ParameterCandidateSet(std::move(net.points), kind);
  if (inject->size() != d)
    throw PreconditionError("make_candidates: injected parameter has wrong dimension");
  Eigen::MatrixXd all(d, net.size() + 1);
  all.leftCols(net.size()) = net.points;
  all.col(net.size()) = *inject;
  return ParameterCandidateSet(std::move(all), kind, net.size());
}

}  // namespace vab
