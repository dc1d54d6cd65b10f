#include "vab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vab/errors.hpp"

namespace vab {

RidgeState::RidgeState(int d, const RidgeConfig& config)
    : config_(config),
      gram_(config.lambda * Eigen::MatrixXd::Identity(d, d)),
      moment_(Eigen::VectorXd::Zero(d)),
      estimate_(Eigen::VectorXd::Zero(d)) {
  if (d < 1) throw PreconditionError("RidgeState: d must be >= 1");
  if (!(config.lambda > 0.0)) throw PreconditionError("RidgeState: lambda must be > 0");
  if (!(config.delta > 0.0 && config.delta < 1.0))
    throw PreconditionError("RidgeState: delta must lie in (0, 1)");
  llt_.compute(gram_);
}

double RidgeState::beta() const {
  if (config_.beta) return *config_.beta;
  const double d = dim();
  return std::sqrt(config_.lambda) * config_.norm_bound +
         config_.noise_scale *
             std::sqrt(2.0 * std::log(1.0 / config_.delta) +
                       d * std::log(1.0 + count_ / (config_.lambda * d)));
}

double RidgeState::width(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return std::sqrt(std::max(0.0, x.dot(llt_.solve(x))));
}

void RidgeState::update(const Eigen::Ref<const Eigen::VectorXd>& x, double y) {
  if (x.size() != dim()) throw PreconditionError("RidgeState::update: wrong dimension");
  gram_.noalias() += x * x.transpose();
  moment_ += y * x;
  ++count_;
  llt_.compute(gram_);
  if (llt_.info() != Eigen::Success)
    throw InvariantViolation("ridge Gram matrix lost positive definiteness");
  estimate_ = llt_.solve(moment_);
}

int OfulAgent::select_action(const Eigen::MatrixXd& contexts) const {
  if (contexts.cols() == 0) throw EmptyContexts();
  const double beta = ridge_.beta();
  int best_arm = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < contexts.cols(); ++a) {
    const double score = contexts.col(a).dot(ridge_.estimate()) + beta * ridge_.width(contexts.col(a));
    if (score > best) {
      best = score;
      best_arm = a;
    }
  }
  return best_arm;
}

HoeffdingVtrAgent::HoeffdingVtrAgent(BaseModelSet models, const RidgeConfig& config)
    : models_(std::move(models)), ridge_(models_.dim(), config) {}

void HoeffdingVtrAgent::plan(QTables& q, VTables& v) const {
  const int S = models_.states;
  const int A = models_.actions;
  const int H = models_.horizon;
  const double beta = ridge_.beta();
  q.assign(static_cast<std::size_t>(H), Eigen::MatrixXd());
  v.assign(static_cast<std::size_t>(H + 1), Eigen::VectorXd::Zero(S));
  for (int h = H; h >= 1; --h) {
    const Eigen::MatrixXd x = models_.expectations(v[static_cast<std::size_t>(h)]);
    Eigen::MatrixXd& qh = q[static_cast<std::size_t>(h - 1)];
    qh.resize(S, A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const auto row = x.row(s * A + a).transpose();
        const double value = models_.reward(s, a) + row.dot(ridge_.estimate()) + beta * ridge_.width(row);
        qh(s, a) = std::clamp(value, 0.0, 1.0);
      }
    }
    v[static_cast<std::size_t>(h - 1)] = qh.rowwise().maxCoeff();
  }
}

HoeffdingEpisode HoeffdingVtrAgent::run_episode(const VarlinAgent::StepFn& env) {
  HoeffdingEpisode ep;
  VTables v;
  plan(ep.q, v);
  int s = models_.initial_state;
  ep.trace.states.push_back(s);
  std::vector<std::pair<Eigen::VectorXd, double>> data;
  for (int h = 1; h <= models_.horizon; ++h) {
    const int a = greedy_action(ep.q[static_cast<std::size_t>(h - 1)], s);
    const int next = env(s, a);
    const Eigen::VectorXd& vn = v[static_cast<std::size_t>(h)];
    data.emplace_back(models_.expectation_row(s, a, vn), vn[next]);
    ep.trace.actions.push_back(a);
    ep.trace.rewards.push_back(models_.reward(s, a));
    ep.trace.states.push_back(next);
    s = next;
  }
  for (const auto& [x, y] : data) ridge_.update(x, y);
  return ep;
}

}  // namespace vab
