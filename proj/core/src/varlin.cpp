#include "vab/varlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "vab/errors.hpp"

namespace vab {
namespace {

constexpr int kChunk = 256;

double max_variance(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& x_m,
                    const Eigen::VectorXd& x_next, bool* negative) {
  const Eigen::VectorXd a = thetas.transpose() * x_next;
  const Eigen::VectorXd b = thetas.transpose() * x_m;
  const double raw = (a - b.cwiseAbs2()).maxCoeff();
  if (negative) *negative = raw < 0.0;
  return std::max(raw, 0.0);
}

// sum_v clip(v, l) v over a set of values, from |v| sorted ascending and
// prefix sums of v^2 and |v|.
struct ClipSums {
  std::vector<double> abs;
  std::vector<double> sq_prefix;
  std::vector<double> abs_prefix;

  explicit ClipSums(std::vector<double> values) : abs(std::move(values)) {
    for (auto& v : abs) v = std::abs(v);
    std::sort(abs.begin(), abs.end());
    sq_prefix.assign(abs.size() + 1, 0.0);
    abs_prefix.assign(abs.size() + 1, 0.0);
    for (std::size_t t = 0; t < abs.size(); ++t) {
      sq_prefix[t + 1] = sq_prefix[t] + abs[t] * abs[t];
      abs_prefix[t + 1] = abs_prefix[t] + abs[t];
    }
  }

  double at(double level) const {
    const auto k = static_cast<std::size_t>(
        std::upper_bound(abs.begin(), abs.end(), level) - abs.begin());
    return sq_prefix[k] + level * (abs_prefix.back() - abs_prefix[k]);
  }
};

}  // namespace

BaseModelSet BaseModelSet::from(const MixtureMDP& mdp) {
  BaseModelSet out;
  out.states = mdp.states();
  out.actions = mdp.actions();
  out.horizon = mdp.horizon();
  out.initial_state = mdp.initial_state();
  for (int i = 0; i < mdp.dim(); ++i) out.base.push_back(mdp.base_model(i));
  out.reward = mdp.reward();
  return out;
}

Eigen::MatrixXd BaseModelSet::expectations(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd out(states * actions, dim());
  for (int i = 0; i < dim(); ++i) out.col(i).noalias() = base[static_cast<std::size_t>(i)] * v;
  return out;
}

Eigen::VectorXd BaseModelSet::expectation_row(int s, int a, const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(dim());
  for (int i = 0; i < dim(); ++i) out[i] = base[static_cast<std::size_t>(i)].row(s * actions + a).dot(v);
  return out;
}

VarlinAgent::VarlinAgent(BaseModelSet models, ParameterCandidateSet candidates, DirectionNet net,
                         const VarlinConfig& config)
    : models_(std::move(models)),
      candidates_(std::move(candidates)),
      net_(std::move(net)),
      ladder_(ClipLadder::for_mixture(models_.horizon, config.episodes)),
      constrain_overflow_(config.constrain_overflow),
      theta_star_(config.theta_star),
      indicators_(config.indicators) {
  const int d = models_.dim();
  if (d < 1) throw PreconditionError("VarlinAgent: no base models");
  if (candidates_.dim() != d || net_.dim() != d)
    throw PreconditionError("VarlinAgent: candidates, net and models differ in dimension");
  if (net_.size() == 0) throw PreconditionError("VarlinAgent: empty net");
  if (models_.reward.rows() != models_.states || models_.reward.cols() != models_.actions)
    throw PreconditionError("VarlinAgent: reward table must be S x A");
  iota_ = config.iota ? *config.iota
                      : iota_mdp(d, models_.horizon, config.episodes, config.iota_scale);
  if (!(iota_ > 0.0)) throw PreconditionError("VarlinAgent: iota must be > 0");
  if (indicators_ && (!theta_star_ || theta_star_->size() != d))
    throw PreconditionError("VarlinAgent: indicator diagnostics need theta*");
}

Eigen::MatrixXd VarlinAgent::alive_matrix() const {
  if (candidates_.alive_count() == 0) throw NoAliveCandidates();
  Eigen::MatrixXd out(dim(), candidates_.alive_count());
  int c = 0;
  for (const int i : candidates_.alive_indices()) out.col(c++) = candidates_.candidate(i);
  return out;
}

void VarlinAgent::plan(QTables& q, VTables& v) const {
  const Eigen::MatrixXd thetas = alive_matrix();
  const int S = models_.states;
  const int A = models_.actions;
  const int H = models_.horizon;
  q.assign(static_cast<std::size_t>(H), Eigen::MatrixXd());
  v.assign(static_cast<std::size_t>(H + 1), Eigen::VectorXd::Zero(S));
  for (int h = H; h >= 1; --h) {
    const Eigen::MatrixXd x = models_.expectations(v[static_cast<std::size_t>(h)]);
    const Eigen::VectorXd best = (x * thetas).rowwise().maxCoeff();
    Eigen::MatrixXd& qh = q[static_cast<std::size_t>(h - 1)];
    qh.resize(S, A);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        qh(s, a) = std::clamp(models_.reward(s, a) + best[s * A + a], 0.0, 1.0);
    v[static_cast<std::size_t>(h - 1)] = qh.rowwise().maxCoeff();
  }
}

double VarlinAgent::variance_estimate(const Eigen::VectorXd& x_m, const Eigen::VectorXd& x_next,
                                      bool* negative) const {
  if (x_m.size() != dim() || x_next.size() != dim())
    throw PreconditionError("variance_estimate: wrong dimension");
  return max_variance(alive_matrix(), x_m, x_next, negative);
}

VarlinEpisode VarlinAgent::run_episode(const StepFn& env) {
  VarlinEpisode ep;
  VTables v;
  plan(ep.q, v);
  const Eigen::MatrixXd thetas = alive_matrix();
  const int H = models_.horizon;
  const int moments = ladder_.moments().last;  // L0; features run to L0 + 1

  int s = models_.initial_state;
  ep.trace.states.push_back(s);
  for (int h = 1; h <= H; ++h) {
    VarlinStep st;
    st.state = s;
    st.action = greedy_action(ep.q[static_cast<std::size_t>(h - 1)], s);
    st.next_state = env(s, st.action);
    if (st.next_state < 0 || st.next_state >= models_.states)
      throw InvariantViolation("environment returned an invalid state");
    Eigen::VectorXd power = v[static_cast<std::size_t>(h)];
    double value = power[st.next_state];
    for (int m = 0; m <= moments + 1; ++m) {
      st.x.push_back(models_.expectation_row(s, st.action, power));
      if (m <= moments) st.target.push_back(value);
      power = power.cwiseAbs2();
      value *= value;
    }
    for (int m = 0; m <= moments; ++m) {
      bool negative = false;
      const double eta = max_variance(thetas, st.x[static_cast<std::size_t>(m)],
                                      st.x[static_cast<std::size_t>(m + 1)], &negative);
      if (negative) ++ep.negative_eta;
      st.eta.push_back(eta);
      st.layer.push_back(ladder_.assign_layer(eta));
    }
    ep.trace.actions.push_back(st.action);
    ep.trace.rewards.push_back(models_.reward(s, st.action));
    ep.trace.states.push_back(st.next_state);
    s = st.next_state;
    ep.steps.push_back(std::move(st));
  }

  if (indicators_) compute_indicators(ep);

  std::set<int> changed;
  for (const auto& st : ep.steps) {
    fold(st);
    for (int m = 0; m <= moments; ++m)
      if (!st.x[static_cast<std::size_t>(m)].isZero(0.0)) changed.insert(key(m, st.layer[static_cast<std::size_t>(m)]));
  }
  const int before = candidates_.alive_count();
  const bool was_fallback = in_fallback_;
  ++episode_;
  // While in fallback the full re-test runs on a doubling schedule.
  if (!in_fallback_ || (episode_ & (episode_ - 1)) == 0)
    filter(std::vector<int>(changed.begin(), changed.end()));

  ep.alive = candidates_.alive_count();
  ep.fallback = in_fallback_;
  ep.removed = was_fallback ? 0 : before - ep.alive;
  return ep;
}

void VarlinAgent::fold(const VarlinStep& step) {
  const int d = dim();
  const int levels = ladder_.clip_levels().size();
  const int n = net_.size();
  for (int m = 0; m <= ladder_.moments().last; ++m) {
    const Eigen::VectorXd& x = step.x[static_cast<std::size_t>(m)];
    if (x.isZero(0.0)) continue;
    const int i = step.layer[static_cast<std::size_t>(m)];
    auto [it, fresh] = blocks_.try_emplace(key(m, i));
    Block& b = it->second;
    if (fresh) {
      b.min_abs.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
      b.max_abs.assign(static_cast<std::size_t>(n), 0.0);
      b.s_x = Eigen::MatrixXd::Zero(d, n * levels);
      b.s_t = Eigen::VectorXd::Zero(n * levels);
      b.w = Eigen::VectorXd::Zero(n * levels);
    }
    const double t = step.target[static_cast<std::size_t>(m)];
    const double eta = step.eta[static_cast<std::size_t>(m)];
    const Eigen::VectorXd dots = net_.points.transpose() * x;
    for (int mu = 0; mu < n; ++mu) {
      const double u = dots[mu];
      if (u == 0.0) continue;
      auto& lo = b.min_abs[static_cast<std::size_t>(mu)];
      auto& hi = b.max_abs[static_cast<std::size_t>(mu)];
      lo = std::min(lo, std::abs(u));
      hi = std::max(hi, std::abs(u));
      for (int j = 1; j <= levels; ++j) {
        const double c = clip(u, ClipLadder::level(j));
        const int col = column(mu, j);
        b.s_x.col(col) += c * x;
        b.s_t[col] += c * t;
        b.w[col] += c * c * eta;
      }
    }
    ++b.count;
    if (indicators_) b.history.insert(b.history.end(), x.data(), x.data() + d);
  }
}

double VarlinAgent::rhs(const Block& b, int col, int j) const {
  return 4.0 * std::sqrt(b.w[col] * iota_) + 4.0 * ClipLadder::level(j) * iota_;
}

void VarlinAgent::filter(const std::vector<int>& changed) {
  const int d = dim();
  const int levels = ladder_.clip_levels().size();
  const int stride = ladder_.overflow_layer() + 1;

  Eigen::VectorXd lo(d), hi(d);
  if (in_fallback_) {
    lo.setConstant(-1.0);
    hi.setConstant(1.0);
  } else {
    candidates_.alive_box(lo, hi);
  }

  std::vector<int> keys;
  if (in_fallback_) {
    for (const auto& kv : blocks_) keys.push_back(kv.first);
  } else {
    keys = changed;
  }

  // Collect the constraints that could bind somewhere in the pool's box.
  std::vector<const double*> sx_cols;
  std::vector<double> st, bound;
  for (const int k : keys) {
    if (!constrained(k % stride)) continue;
    const Block& b = blocks_.at(k);
    // |eps| <= 2, so a block with at most 2 iota entries can never bind.
    if (b.count <= 2.0 * iota_) continue;
    for (int mu = 0; mu < net_.size(); ++mu) {
      const double top = b.max_abs[static_cast<std::size_t>(mu)];
      if (top == 0.0) continue;
      const double bottom = b.min_abs[static_cast<std::size_t>(mu)];
      // Below j_head clipping is inactive (same sums, looser slack); past
      // j_tail every weight is clipped and records are exact rescalings.
      int j_head = 1;
      while (j_head < levels && ClipLadder::level(j_head + 1) >= top) ++j_head;
      int j_tail = 1;
      while (j_tail < levels && ClipLadder::level(j_tail) > bottom) ++j_tail;
      for (int j = j_head; j <= j_tail; ++j) {
        const int col = column(mu, j);
        const double* sx = b.s_x.col(col).data();
        double vlo = -b.s_t[col], vhi = -b.s_t[col];
        for (int a = 0; a < d; ++a) {
          vlo += std::min(sx[a] * lo[a], sx[a] * hi[a]);
          vhi += std::max(sx[a] * lo[a], sx[a] * hi[a]);
        }
        const double r = rhs(b, col, j);
        if (std::max(std::abs(vlo), std::abs(vhi)) <= r) continue;
        sx_cols.push_back(sx);
        st.push_back(b.s_t[col]);
        bound.push_back(r);
      }
    }
  }

  const int nr = static_cast<int>(sx_cols.size());
  if (nr == 0 && !in_fallback_) return;

  Eigen::MatrixXd sx(d, nr);
  for (int r = 0; r < nr; ++r) sx.col(r) = Eigen::Map<const Eigen::VectorXd>(sx_cols[static_cast<std::size_t>(r)], d);

  std::vector<int> pool;
  if (in_fallback_) {
    pool.resize(static_cast<std::size_t>(candidates_.size()));
    for (int i = 0; i < candidates_.size(); ++i) pool[static_cast<std::size_t>(i)] = i;
  } else {
    pool.assign(candidates_.alive_indices().begin(), candidates_.alive_indices().end());
  }

  const int np = static_cast<int>(pool.size());
  std::vector<double> ratio(static_cast<std::size_t>(np), 0.0);
  Eigen::MatrixXd feat, lhs;
  for (int start = 0; start < np && nr > 0; start += kChunk) {
    const int len = std::min(kChunk, np - start);
    feat.resize(d, len);
    for (int t = 0; t < len; ++t) feat.col(t) = candidates_.candidate(pool[static_cast<std::size_t>(start + t)]);
    lhs.noalias() = feat.transpose() * sx;
    for (int t = 0; t < len; ++t) {
      double worst = 0.0;
      for (int r = 0; r < nr; ++r)
        worst = std::max(worst, std::abs(lhs(t, r) - st[static_cast<std::size_t>(r)]) / bound[static_cast<std::size_t>(r)]);
      ratio[static_cast<std::size_t>(start + t)] = worst;
    }
  }

  std::vector<std::uint8_t> mask(static_cast<std::size_t>(candidates_.size()), 0);
  bool any = false;
  for (int t = 0; t < np; ++t) {
    if (ratio[static_cast<std::size_t>(t)] <= 1.0) {
      mask[static_cast<std::size_t>(pool[static_cast<std::size_t>(t)])] = 1;
      any = true;
    }
  }
  if (any) {
    candidates_.assign(mask);
    in_fallback_ = false;
    return;
  }
  int best = 0;
  for (int t = 1; t < np; ++t)
    if (ratio[static_cast<std::size_t>(t)] < ratio[static_cast<std::size_t>(best)]) best = t;
  candidates_.retain_only(pool[static_cast<std::size_t>(best)]);
  in_fallback_ = true;
}

double VarlinAgent::violation_ratio(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  if (theta.size() != dim()) throw PreconditionError("violation_ratio: wrong dimension");
  const int levels = ladder_.clip_levels().size();
  const int stride = ladder_.overflow_layer() + 1;
  double worst = 0.0;
  for (const auto& [k, b] : blocks_) {
    if (!constrained(k % stride)) continue;
    const Eigen::VectorXd lhs = b.s_x.transpose() * theta;
    for (int mu = 0; mu < net_.size(); ++mu)
      for (int j = 1; j <= levels; ++j) {
        const int col = column(mu, j);
        worst = std::max(worst, std::abs(lhs[col] - b.s_t[col]) / rhs(b, col, j));
      }
  }
  return worst;
}

bool VarlinAgent::membership(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  if (theta.size() != dim()) throw PreconditionError("membership: wrong dimension");
  const int levels = ladder_.clip_levels().size();
  const int stride = ladder_.overflow_layer() + 1;
  for (const auto& [k, b] : blocks_) {
    if (!constrained(k % stride)) continue;
    const Eigen::VectorXd lhs = b.s_x.transpose() * theta;
    for (int mu = 0; mu < net_.size(); ++mu)
      for (int j = 1; j <= levels; ++j) {
        const int col = column(mu, j);
        if (std::abs(lhs[col] - b.s_t[col]) > rhs(b, col, j)) return false;
      }
  }
  return true;
}

void VarlinAgent::compute_indicators(VarlinEpisode& ep) const {
  const int d = dim();
  const int H = models_.horizon;
  const int levels = ladder_.clip_levels().size();
  const double factor = 4.0 * (d + 2) * (d + 2) - 1.0;
  const Eigen::MatrixXd thetas = alive_matrix();
  const Eigen::VectorXd& star = *theta_star_;

  ep.indicators.assign(static_cast<std::size_t>(H), 1);
  for (int u = 2; u <= H; ++u) {
    bool ok = ep.indicators[static_cast<std::size_t>(u - 2)] != 0;
    for (int m = 0; ok && m <= ladder_.moments().last; ++m) {
      const Eigen::VectorXd& xu = ep.steps[static_cast<std::size_t>(u - 1)].x[static_cast<std::size_t>(m)];
      Eigen::Index best = 0;
      (thetas.transpose() * xu).maxCoeff(&best);
      const Eigen::VectorXd mu = thetas.col(best) - star;

      // Within-episode increments, grouped by layer.
      std::map<int, std::vector<double>> fresh;
      for (int v = 1; v < u; ++v) {
        const auto& st = ep.steps[static_cast<std::size_t>(v - 1)];
        const double val = st.x[static_cast<std::size_t>(m)].dot(mu);
        if (val != 0.0) fresh[st.layer[static_cast<std::size_t>(m)]].push_back(val);
      }
      for (auto it = fresh.begin(); ok && it != fresh.end(); ++it) {
        const ClipSums delta(it->second);
        std::optional<ClipSums> past;
        for (int j = 1; ok && j <= levels; ++j) {
          const double l = ClipLadder::level(j);
          const double inc = delta.at(l);
          if (inc <= factor * l * l) continue;
          if (!past) {
            std::vector<double> vals;
            const auto found = blocks_.find(key(m, it->first));
            if (found != blocks_.end()) {
              const auto& hist = found->second.history;
              for (std::size_t p = 0; p + static_cast<std::size_t>(d) <= hist.size(); p += static_cast<std::size_t>(d))
                vals.push_back(Eigen::Map<const Eigen::VectorXd>(hist.data() + p, d).dot(mu));
            }
            past.emplace(std::move(vals));
          }
          if (inc > factor * (past->at(l) + l * l)) ok = false;
        }
      }
    }
    ep.indicators[static_cast<std::size_t>(u - 1)] = ok ? 1 : 0;
  }
  ep.indicator_drops = 1 - ep.indicators.back();
}

VarlinRecord VarlinAgent::record(int m, int i, int j, int mu) const {
  if (!ladder_.moments().contains(m) || i < ladder_.variance_layers().first ||
      i > ladder_.overflow_layer() || !ladder_.clip_levels().contains(j) || mu < 0 ||
      mu >= net_.size())
    throw PreconditionError("VarlinAgent::record: index out of range");
  VarlinRecord out;
  out.s_x = Eigen::VectorXd::Zero(dim());
  const auto it = blocks_.find(key(m, i));
  if (it == blocks_.end()) return out;
  const int col = column(mu, j);
  out.count = it->second.count;
  out.s_t = it->second.s_t[col];
  out.s_x = it->second.s_x.col(col);
  out.w = it->second.w[col];
  return out;
}

std::pair<double, double> VarlinAgent::phi_psi(int m, int i, int j, int mu) const {
  const VarlinRecord r = record(m, i, j, mu);
  const double l = ClipLadder::level(j);
  return {r.s_x.dot(net_.points.col(mu)) + l * l, r.w};
}

std::size_t VarlinAgent::accumulator_bytes() const {
  std::size_t total = 0;
  for (const auto& [k, b] : blocks_)
    total += sizeof(double) * static_cast<std::size_t>(b.s_x.size() + b.s_t.size() + b.w.size() +
                                                       2 * static_cast<Eigen::Index>(b.min_abs.size()) +
                                                       static_cast<Eigen::Index>(b.history.size()));
  return total;
}

}  // namespace vab
