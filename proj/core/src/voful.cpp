#include "vab/voful.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vab/errors.hpp"

namespace vab {
namespace {

constexpr int kChunk = 256;

// [1, theta_1..theta_d, theta_a theta_b for a <= b]
void fill_features(const Eigen::Ref<const Eigen::VectorXd>& t, Eigen::Ref<Eigen::VectorXd> out) {
  const int d = static_cast<int>(t.size());
  out[0] = 1.0;
  out.segment(1, d) = t;
  int k = 1 + d;
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) out[k++] = t[a] * t[b];
}

}  // namespace

VofulAgent::VofulAgent(ParameterCandidateSet candidates, DirectionNet net,
                       const VofulConfig& config)
    : candidates_(std::move(candidates)),
      net_(std::move(net)),
      ladder_(ClipLadder::for_bandit(config.rounds)) {
  const int d = candidates_.dim();
  if (net_.dim() != d) throw PreconditionError("VofulAgent: net and candidates differ in dimension");
  if (net_.size() == 0) throw PreconditionError("VofulAgent: empty net");
  iota_ = config.iota ? *config.iota
                      : iota_bandit(d, config.rounds, config.delta, config.iota_scale);
  if (!(iota_ > 0.0)) throw PreconditionError("VofulAgent: iota must be > 0");

  nfeat_ = 1 + d + d * (d + 1) / 2;
  const int levels = ladder_.clip_levels().size();
  const int records = net_.size() * levels;
  lin_ = Eigen::MatrixXd::Zero(1 + d, records);
  quad_ = Eigen::MatrixXd::Zero(nfeat_, records);
  s_c_ = Eigen::VectorXd::Zero(records);
  count_.assign(static_cast<std::size_t>(records), 0);
  slack_.resize(records);
  for (int m = 0; m < net_.size(); ++m)
    for (int j = ladder_.clip_levels().first; j <= ladder_.clip_levels().last; ++j)
      slack_[column(m, j)] = ClipLadder::level(j) * iota_;

  cand_feat_.resize(nfeat_, candidates_.size());
  for (int i = 0; i < candidates_.size(); ++i) features(candidates_.candidate(i), cand_feat_.col(i));
}

int VofulAgent::column(int mu, int j) const {
  return mu * ladder_.clip_levels().size() + (j - ladder_.clip_levels().first);
}

void VofulAgent::features(const Eigen::Ref<const Eigen::VectorXd>& theta,
                          Eigen::Ref<Eigen::VectorXd> out) const {
  fill_features(theta, out);
}

int VofulAgent::select_action(const Eigen::MatrixXd& contexts) const {
  if (contexts.cols() == 0) throw EmptyContexts();
  if (candidates_.alive_count() == 0) throw NoAliveCandidates();
  int best_arm = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < contexts.cols(); ++a) {
    double v = -std::numeric_limits<double>::infinity();
    for (const int i : candidates_.alive_indices())
      v = std::max(v, contexts.col(a).dot(candidates_.candidate(i)));
    if (v > best) {
      best = v;
      best_arm = a;
    }
  }
  return best_arm;
}

double VofulAgent::violation_ratio(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  if (theta.size() != dim()) throw PreconditionError("violation_ratio: wrong dimension");
  Eigen::VectorXd f(nfeat_);
  fill_features(theta, f);
  const int d = dim();
  double worst = 0.0;
  for (int r = 0; r < lin_.cols(); ++r) {
    const double lhs = std::abs(lin_.col(r).dot(f.head(1 + d)));
    const double psi = std::max(0.0, quad_.col(r).dot(f));
    worst = std::max(worst, lhs / (std::sqrt(psi * iota_) + slack_[r]));
  }
  return worst;
}

bool VofulAgent::membership(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  if (theta.size() != dim()) throw PreconditionError("membership: wrong dimension");
  Eigen::VectorXd f(nfeat_);
  fill_features(theta, f);
  const int d = dim();
  for (int r = 0; r < lin_.cols(); ++r) {
    const double lhs = std::abs(lin_.col(r).dot(f.head(1 + d)));
    const double psi = std::max(0.0, quad_.col(r).dot(f));
    if (lhs > std::sqrt(psi * iota_) + slack_[r]) return false;
  }
  return true;
}

VofulStep VofulAgent::update(const Eigen::Ref<const Eigen::VectorXd>& x, double y) {
  const int d = dim();
  if (x.size() != d) throw PreconditionError("VofulAgent::update: wrong dimension");
  if (std::abs(y) > 1.0 + 1e-12) throw PreconditionError("VofulAgent::update: |y| > 1");
  if (x.norm() > 1.0 + 1e-12) throw PreconditionError("VofulAgent::update: ||x|| > 1");

  Eigen::VectorXd u(1 + d);
  u[0] = y;
  u.tail(d) = -x;
  Eigen::VectorXd v(nfeat_);
  v[0] = y * y;
  v.segment(1, d) = -2.0 * y * x;
  int k = 1 + d;
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) v[k++] = (a == b ? 1.0 : 2.0) * x[a] * x[b];

  const Eigen::VectorXd dots = net_.points.transpose() * x;
  const int records = static_cast<int>(lin_.cols());
  Eigen::VectorXd c(records);
  for (int m = 0; m < net_.size(); ++m)
    for (int j = ladder_.clip_levels().first; j <= ladder_.clip_levels().last; ++j)
      c[column(m, j)] = clip(dots[m], ClipLadder::level(j));

  lin_.noalias() += u * c.transpose();
  quad_.noalias() += v * c.cwiseAbs2().transpose();
  s_c_ += c;
  for (int r = 0; r < records; ++r) {
    if (c[r] == 0.0) continue;
    auto& n = count_[static_cast<std::size_t>(r)];
    // By Cauchy-Schwarz a record with at most iota nonzero weights can never
    // bind, so it only enters the active list once it crosses that count.
    if (n <= iota_ && n + 1 > iota_) active_.push_back(r);
    ++n;
  }
  ++round_;

  const int before = candidates_.alive_count();
  const bool was_fallback = in_fallback_;
  // While in fallback the full re-test runs on a doubling schedule.
  if (!in_fallback_ || (round_ & (round_ - 1)) == 0) filter();
  VofulStep step;
  step.alive = candidates_.alive_count();
  step.fallback = in_fallback_;
  step.removed = was_fallback ? 0 : before - step.alive;
  return step;
}

void VofulAgent::filter() {
  if (active_.empty() && !in_fallback_) return;
  const int d = dim();
  const int na = static_cast<int>(active_.size());

  Eigen::MatrixXd lin(1 + d, na), quad(nfeat_, na);
  Eigen::VectorXd slack(na);
  for (int t = 0; t < na; ++t) {
    lin.col(t) = lin_.col(active_[static_cast<std::size_t>(t)]);
    quad.col(t) = quad_.col(active_[static_cast<std::size_t>(t)]);
    slack[t] = slack_[active_[static_cast<std::size_t>(t)]];
  }

  // While in fallback every candidate is re-tested, so the set can recover.
  std::vector<int> pool;
  if (in_fallback_) {
    pool.resize(static_cast<std::size_t>(candidates_.size()));
    for (int i = 0; i < candidates_.size(); ++i) pool[static_cast<std::size_t>(i)] = i;
  } else {
    pool.assign(candidates_.alive_indices().begin(), candidates_.alive_indices().end());
  }

  const int np = static_cast<int>(pool.size());
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(candidates_.size()), 0);
  bool any = false;
  Eigen::MatrixXd feat, lhs, psi;
  const auto evaluate = [&](int start, int len) {
    feat.resize(nfeat_, len);
    for (int t = 0; t < len; ++t) feat.col(t) = cand_feat_.col(pool[static_cast<std::size_t>(start + t)]);
    lhs.noalias() = feat.topRows(1 + d).transpose() * lin;
    psi.noalias() = feat.transpose() * quad;
  };
  for (int start = 0; start < np; start += kChunk) {
    const int len = std::min(kChunk, np - start);
    evaluate(start, len);
    for (int t = 0; t < len; ++t) {
      bool pass = true;
      for (int r = 0; r < na && pass; ++r) {
        // lhs <= sqrt(psi iota) + slack without the square root.
        const double e = std::abs(lhs(t, r)) - slack[r];
        if (e > 0.0 && e * e > std::max(0.0, psi(t, r)) * iota_) pass = false;
      }
      if (pass) {
        mask[static_cast<std::size_t>(pool[static_cast<std::size_t>(start + t)])] = 1;
        any = true;
      }
    }
  }
  if (any) {
    candidates_.assign(mask);
    in_fallback_ = false;
    return;
  }

  // Everything failed: keep the smallest worst-case violation ratio.
  int best = 0;
  double best_ratio = std::numeric_limits<double>::infinity();
  for (int start = 0; start < np; start += kChunk) {
    const int len = std::min(kChunk, np - start);
    evaluate(start, len);
    for (int t = 0; t < len; ++t) {
      double worst = 0.0;
      for (int r = 0; r < na; ++r)
        worst = std::max(worst, std::abs(lhs(t, r)) /
                                    (std::sqrt(std::max(0.0, psi(t, r)) * iota_) + slack[r]));
      if (worst < best_ratio) {
        best_ratio = worst;
        best = start + t;
      }
    }
  }
  candidates_.retain_only(pool[static_cast<std::size_t>(best)]);
  in_fallback_ = true;
}

VofulRecord VofulAgent::record(int mu, int j) const {
  if (mu < 0 || mu >= net_.size() || !ladder_.clip_levels().contains(j))
    throw PreconditionError("VofulAgent::record: index out of range");
  const int d = dim();
  const int r = column(mu, j);
  VofulRecord out;
  out.count = count_[static_cast<std::size_t>(r)];
  out.s_c = s_c_[r];
  out.s_y = lin_(0, r);
  out.s_x = -lin_.col(r).tail(d);
  out.q_yy = quad_(0, r);
  out.q_xy = -0.5 * quad_.col(r).segment(1, d);
  out.q_xx.resize(d, d);
  int k = 1 + d;
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      const double w = quad_(k++, r);
      out.q_xx(a, b) = a == b ? w : 0.5 * w;
      out.q_xx(b, a) = out.q_xx(a, b);
    }
  }
  return out;
}

std::pair<double, double> VofulAgent::phi_psi(int mu, int j,
                                              const Eigen::Ref<const Eigen::VectorXd>& theta_ref) const {
  const VofulRecord rec = record(mu, j);
  const double l = ClipLadder::level(j);
  const double phi = rec.s_x.dot(net_.points.col(mu)) + l * l;
  Eigen::VectorXd f(nfeat_);
  fill_features(theta_ref, f);
  const double psi = std::max(0.0, quad_.col(column(mu, j)).dot(f));
  return {phi, psi};
}

std::size_t VofulAgent::accumulator_bytes() const {
  return sizeof(double) * static_cast<std::size_t>(lin_.size() + quad_.size() + s_c_.size()) +
         sizeof(int) * count_.size();
}

}  // namespace vab
