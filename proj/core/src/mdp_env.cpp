#include "vab/mdp_env.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "vab/errors.hpp"

namespace vab {

double EpisodeTrace::total_reward() const {
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

int greedy_action(const Eigen::MatrixXd& q, int s) {
  int best = 0;
  for (int a = 1; a < q.cols(); ++a)
    if (q(s, a) > q(s, best)) best = a;
  return best;
}

MixtureMDP::MixtureMDP(int states, int actions, int horizon, std::vector<Eigen::MatrixXd> base,
                       Eigen::VectorXd theta_star, Eigen::MatrixXd reward, int initial_state)
    : states_(states),
      actions_(actions),
      horizon_(horizon),
      initial_(initial_state),
      base_(std::move(base)),
      theta_(std::move(theta_star)),
      reward_(std::move(reward)) {
  if (states_ < 1 || actions_ < 1 || horizon_ < 1)
    throw PreconditionError("MixtureMDP: S, A and H must be >= 1");
  if (base_.empty()) throw PreconditionError("MixtureMDP: need at least one base model");
  if (theta_.size() != dim()) throw PreconditionError("MixtureMDP: theta* has wrong dimension");
  if (initial_ < 0 || initial_ >= states_) throw PreconditionError("MixtureMDP: bad initial state");
  if (reward_.rows() != states_ || reward_.cols() != actions_)
    throw PreconditionError("MixtureMDP: reward table must be S x A");
  if (reward_.minCoeff() < 0.0 || reward_.maxCoeff() > 1.0)
    throw PreconditionError("MixtureMDP: rewards must lie in [0, 1]");
  for (const auto& p : base_) {
    if (p.rows() != states_ * actions_ || p.cols() != states_)
      throw PreconditionError("MixtureMDP: base model must be (S*A) x S");
    if (p.minCoeff() < 0.0) throw PreconditionError("MixtureMDP: negative transition entry");
    for (int r = 0; r < p.rows(); ++r)
      if (std::abs(p.row(r).sum() - 1.0) > 1e-12)
        throw PreconditionError("MixtureMDP: base model row does not sum to 1");
  }
  if (theta_.minCoeff() < 0.0 || std::abs(theta_.sum() - 1.0) > 1e-12)
    throw PreconditionError("MixtureMDP: theta* must lie in the probability simplex");
  kernel_ = Eigen::MatrixXd::Zero(states_ * actions_, states_);
  for (int i = 0; i < dim(); ++i) kernel_ += theta_[i] * base_[static_cast<std::size_t>(i)];
}

double MixtureMDP::base_expectation(int i, int s, int a, const Eigen::VectorXd& v) const {
  if (i < 0 || i >= dim()) throw PreconditionError("base_expectation: model index out of range");
  return base_[static_cast<std::size_t>(i)].row(row(s, a)).dot(v);
}

Eigen::MatrixXd MixtureMDP::base_expectations(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd out(states_ * actions_, dim());
  for (int i = 0; i < dim(); ++i) out.col(i).noalias() = base_[static_cast<std::size_t>(i)] * v;
  return out;
}

int MixtureMDP::step(int s, int a, Rng& rng) const {
  const auto p = kernel_.row(row(s, a));
  const double u = rng.uniform();
  double acc = 0.0;
  int last = 0;
  for (int t = 0; t < states_; ++t) {
    if (p[t] <= 0.0) continue;
    acc += p[t];
    last = t;
    if (u < acc) return t;
  }
  return last;
}

QTables MixtureMDP::optimal_q() const {
  QTables q(static_cast<std::size_t>(horizon_));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(states_);
  for (int h = horizon_; h >= 1; --h) {
    const Eigen::VectorXd next = kernel_ * v;
    Eigen::MatrixXd& qh = q[static_cast<std::size_t>(h - 1)];
    qh.resize(states_, actions_);
    for (int s = 0; s < states_; ++s)
      for (int a = 0; a < actions_; ++a) qh(s, a) = reward_(s, a) + next[row(s, a)];
    v = qh.rowwise().maxCoeff();
  }
  return q;
}

VTables MixtureMDP::optimal_values() const {
  const QTables q = optimal_q();
  VTables v(static_cast<std::size_t>(horizon_ + 1));
  for (int h = 1; h <= horizon_; ++h) v[static_cast<std::size_t>(h - 1)] = q[static_cast<std::size_t>(h - 1)].rowwise().maxCoeff();
  v[static_cast<std::size_t>(horizon_)] = Eigen::VectorXd::Zero(states_);
  return v;
}

double MixtureMDP::policy_value(const QTables& q) const {
  if (static_cast<int>(q.size()) != horizon_)
    throw PreconditionError("policy_value: need one Q table per step");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(states_);
  for (int h = horizon_; h >= 1; --h) {
    const Eigen::MatrixXd& qh = q[static_cast<std::size_t>(h - 1)];
    if (qh.rows() != states_ || qh.cols() != actions_)
      throw PreconditionError("policy_value: Q table must be S x A");
    Eigen::VectorXd next(states_);
    for (int s = 0; s < states_; ++s) {
      const int a = greedy_action(qh, s);
      next[s] = reward_(s, a) + kernel_.row(row(s, a)).dot(v);
    }
    v = next;
  }
  return v[initial_];
}

EpisodeTrace MixtureMDP::rollout(const QTables& q, Rng& rng) const {
  EpisodeTrace tr;
  tr.states.reserve(static_cast<std::size_t>(horizon_ + 1));
  int s = initial_;
  tr.states.push_back(s);
  double total = 0.0;
  for (int h = 1; h <= horizon_; ++h) {
    const int a = greedy_action(q[static_cast<std::size_t>(h - 1)], s);
    tr.actions.push_back(a);
    tr.rewards.push_back(reward_(s, a));
    total += reward_(s, a);
    s = step(s, a, rng);
    tr.states.push_back(s);
  }
  if (total > 1.0) throw InvariantViolation("episode reward " + std::to_string(total) + " exceeds 1");
  return tr;
}

void MixtureMDP::write_text(std::ostream& out) const {
  out << "mixture-mdp 1\n";
  out << std::setprecision(17);
  out << "states " << states_ << "\nactions " << actions_ << "\ndim " << dim() << "\nhorizon "
      << horizon_ << "\ninitial " << initial_ << "\n";
  out << "theta";
  for (int i = 0; i < dim(); ++i) out << ' ' << theta_[i];
  out << "\nreward\n";
  for (int s = 0; s < states_; ++s) {
    for (int a = 0; a < actions_; ++a) out << (a ? " " : "") << reward_(s, a);
    out << '\n';
  }
  for (int i = 0; i < dim(); ++i) {
    out << "model " << i << '\n';
    const auto& p = base_[static_cast<std::size_t>(i)];
    for (int r = 0; r < p.rows(); ++r) {
      for (int t = 0; t < p.cols(); ++t) out << (t ? " " : "") << p(r, t);
      out << '\n';
    }
  }
}

namespace {

void expect_word(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word)
    throw IoError("mixture-mdp: expected '" + word + "', got '" + got + "'");
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw IoError(std::string("mixture-mdp: could not read ") + what);
  return v;
}

}  // namespace

MixtureMDP MixtureMDP::read_text(std::istream& in) {
  expect_word(in, "mixture-mdp");
  if (read_value<int>(in, "version") != 1) throw IoError("mixture-mdp: unsupported version");
  expect_word(in, "states");
  const int S = read_value<int>(in, "states");
  expect_word(in, "actions");
  const int A = read_value<int>(in, "actions");
  expect_word(in, "dim");
  const int d = read_value<int>(in, "dim");
  expect_word(in, "horizon");
  const int H = read_value<int>(in, "horizon");
  expect_word(in, "initial");
  const int s1 = read_value<int>(in, "initial");
  if (S < 1 || A < 1 || d < 1) throw IoError("mixture-mdp: bad sizes");
  expect_word(in, "theta");
  Eigen::VectorXd theta(d);
  for (int i = 0; i < d; ++i) theta[i] = read_value<double>(in, "theta");
  expect_word(in, "reward");
  Eigen::MatrixXd reward(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) reward(s, a) = read_value<double>(in, "reward");
  std::vector<Eigen::MatrixXd> base;
  for (int i = 0; i < d; ++i) {
    expect_word(in, "model");
    if (read_value<int>(in, "model index") != i) throw IoError("mixture-mdp: models out of order");
    Eigen::MatrixXd p(S * A, S);
    for (int r = 0; r < S * A; ++r)
      for (int t = 0; t < S; ++t) p(r, t) = read_value<double>(in, "transition");
    base.push_back(std::move(p));
  }
  return MixtureMDP(S, A, H, std::move(base), std::move(theta), std::move(reward), s1);
}

MixtureMDP make_goal_instance(const MixtureInstanceSpec& spec) {
  const int S = spec.states;
  const int A = spec.actions;
  const int d = spec.dim;
  if (S < 3) throw PreconditionError("make_goal_instance: need at least 3 states");
  if (A < 1 || d < 1 || spec.horizon < 1)
    throw PreconditionError("make_goal_instance: A, d and H must be >= 1");
  if (spec.branching < 1) throw PreconditionError("make_goal_instance: branching must be >= 1");
  const int sink = S - 1;
  const int goal = S - 2;

  Rng rng(derive_seed(spec.seed, 0, "mixture-models"));
  std::vector<Eigen::MatrixXd> base;
  const int random_models = spec.drift && d > 1 ? d - 1 : d;
  for (int i = 0; i < d; ++i) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(S * A, S);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const int r = s * A + a;
        if (s == sink || s == goal) {
          p(r, sink) = 1.0;
        } else if (i >= random_models) {
          p(r, s + 1) = 1.0;
        } else {
          const int k = std::min(spec.branching, S);
          for (int b = 0; b < k; ++b) {
            const int t = static_cast<int>(rng.next() % static_cast<std::uint64_t>(S));
            p(r, t) += -std::log(1.0 - rng.uniform());
          }
          p.row(r) /= p.row(r).sum();
        }
      }
    }
    base.push_back(std::move(p));
  }

  Eigen::VectorXd theta(d);
  if (spec.theta_star) {
    theta = *spec.theta_star;
  } else {
    Rng trng(derive_seed(spec.seed, 0, "mixture-theta"));
    for (int i = 0; i < d; ++i) theta[i] = -std::log(1.0 - trng.uniform());
    theta /= theta.sum();
  }

  Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(S, A);
  reward.row(goal).setOnes();
  return MixtureMDP(S, A, spec.horizon, std::move(base), std::move(theta), std::move(reward), 0);
}

}  // namespace vab
