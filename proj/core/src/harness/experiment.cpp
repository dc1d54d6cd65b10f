#include "vab/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

#include "vab/errors.hpp"
#include "vab/net.hpp"
#include "vab/varlin.hpp"
#include "vab/voful.hpp"

namespace vab {
namespace {

constexpr double kRegretTolerance = 1e-10;

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int positive_int(const Config& cfg, const std::string& key, long long fallback, long long lo = 1) {
  const long long v = cfg.get_int(key, fallback);
  if (v < lo) throw ConfigError(key, "must be >= " + std::to_string(lo));
  if (v > 1'000'000'000) throw ConfigError(key, "too large");
  return static_cast<int>(v);
}

double probability(const Config& cfg, const std::string& key, double fallback) {
  const double v = cfg.get_double(key, fallback);
  if (!(v > 0.0 && v < 1.0)) throw ConfigError(key, "must lie in (0, 1)");
  return v;
}

double positive(const Config& cfg, const std::string& key, double fallback) {
  const double v = cfg.get_double(key, fallback);
  if (!(v > 0.0)) throw ConfigError(key, "must be > 0");
  return v;
}

RidgeConfig read_ridge(const Config& cfg, const std::string& prefix) {
  RidgeConfig r;
  r.lambda = positive(cfg, prefix + ".lambda", 1.0);
  r.delta = probability(cfg, prefix + ".delta", 0.01);
  r.norm_bound = positive(cfg, prefix + ".S", 1.0);
  r.noise_scale = positive(cfg, prefix + ".R", 1.0);
  if (cfg.has(prefix + ".beta")) {
    const double b = cfg.get_double(prefix + ".beta");
    if (b < 0.0) throw ConfigError(prefix + ".beta", "must be >= 0");
    r.beta = b;
  }
  return r;
}

void check_agents(const std::vector<std::string>& agents, const std::vector<std::string>& known) {
  if (agents.empty()) throw ConfigError("agents", "at least one agent is required");
  for (const auto& a : agents)
    if (std::find(known.begin(), known.end(), a) == known.end())
      throw ConfigError("agents", "unknown agent '" + a + "'");
}

std::vector<TraceRow> run_bandit(const ExperimentConfig& cfg, const std::string& agent, long long seed) {
  const BanditInstance inst = make_bandit_instance(cfg, seed);
  const auto useed = static_cast<std::uint64_t>(seed);
  Rng rng(derive_seed(cfg.master_seed, useed, "bandit-noise"));
  const Eigen::VectorXd& star = inst.theta_star();

  std::optional<VofulAgent> voful;
  std::optional<OfulAgent> oful;
  if (agent == "voful") {
    const auto& s = cfg.voful;
    std::optional<Eigen::VectorXd> inject;
    if (s.inject_theta_star) inject = star;
    auto cands = make_candidates(cfg.d, s.candidates, NormKind::l2,
                                 derive_seed(cfg.master_seed, useed, "voful-candidates"), inject);
    auto net = make_net(cfg.d, 1.0, default_resolution(cfg.d, 1.0, s.net_points), NormKind::l2,
                        derive_seed(cfg.master_seed, 0, "voful-net"), s.net_points);
    VofulConfig vc;
    vc.rounds = cfg.rounds;
    vc.delta = s.delta;
    vc.iota_scale = s.c_iota;
    voful.emplace(std::move(cands), std::move(net), vc);
  } else {
    oful.emplace(cfg.d, cfg.oful);
  }

  std::vector<TraceRow> rows;
  rows.reserve(static_cast<std::size_t>(cfg.rounds));
  double cum = 0.0;
  for (int k = 1; k <= cfg.rounds; ++k) {
    const Eigen::MatrixXd ctx = inst.sample_contexts(k);
    const int arm = voful ? voful->select_action(ctx) : oful->select_action(ctx);
    const double y = inst.pull_arm(ctx, arm, k, rng);
    const double regret = inst.instant_regret_arm(ctx, arm);
    if (regret < -kRegretTolerance) throw InvariantViolation("negative bandit regret");
    TraceRow row;
    row.agent = agent;
    row.seed = seed;
    row.index = k;
    if (voful) {
      const VofulStep step = voful->update(ctx.col(arm), y);
      row.alive_candidates = step.alive;
      row.fallback_fired = step.fallback;
      row.theta_star_member = voful->membership(star);
    } else {
      oful->update(ctx.col(arm), y);
    }
    cum += regret;
    row.instant_regret = regret;
    row.cum_regret = cum;
    rows.push_back(std::move(row));
  }
  return rows;
}

void check_episode(const VarlinEpisode& ep, const QTables& q_star, const Eigen::VectorXd& star,
                   bool star_alive, bool check_optimism) {
  for (const auto& q : ep.q)
    if (q.minCoeff() < 0.0 || q.maxCoeff() > 1.0) throw InvariantViolation("planned Q outside [0, 1]");
  for (const auto& st : ep.steps) {
    for (const auto& x : st.x)
      if (x.minCoeff() < -1e-12 || x.maxCoeff() > 1.0 + 1e-12)
        throw InvariantViolation("moment feature outside [0, 1]");
    for (std::size_t m = 0; m < st.eta.size(); ++m) {
      if (st.eta[m] < 0.0 || st.eta[m] > 1.0 + 1e-12) throw InvariantViolation("variance estimate outside [0, 1]");
      if (star_alive) {
        const double truth = star.dot(st.x[m + 1]) - std::pow(star.dot(st.x[m]), 2);
        if (st.eta[m] < truth - kRegretTolerance)
          throw InvariantViolation("variance estimate below the true proxy while theta* is alive");
      }
    }
  }
  if (check_optimism && star_alive) {
    for (std::size_t h = 0; h < ep.q.size(); ++h)
      if ((ep.q[h] - q_star[h]).minCoeff() < -kRegretTolerance)
        throw InvariantViolation("optimism failed: Q_h < Q*_h while theta* is alive");
  }
}

std::vector<TraceRow> run_mdp(const ExperimentConfig& cfg, const std::string& agent, long long seed) {
  const MixtureMDP mdp = make_mdp_instance(cfg, seed);
  const auto useed = static_cast<std::uint64_t>(seed);
  Rng rng(derive_seed(cfg.master_seed, useed, "mdp-transitions"));
  const auto env = [&](int s, int a) { return mdp.step(s, a, rng); };
  const double v_star = mdp.optimal_values().front()[mdp.initial_state()];
  const QTables q_star = mdp.optimal_q();
  const Eigen::VectorXd& star = mdp.theta_star();
  const int d = mdp.dim();

  std::optional<VarlinAgent> varlin;
  std::optional<HoeffdingVtrAgent> hoeffding;
  if (agent == "varlin") {
    const auto& s = cfg.varlin;
    std::optional<Eigen::VectorXd> inject;
    if (s.inject_theta_star) inject = star;
    auto cands = make_candidates(d, s.candidates, NormKind::l1,
                                 derive_seed(cfg.master_seed, useed, "varlin-candidates"), inject);
    auto net = make_net(d, 2.0, default_resolution(d, 2.0, s.net_points), NormKind::l1,
                        derive_seed(cfg.master_seed, 0, "varlin-net"), s.net_points);
    VarlinConfig vc;
    vc.episodes = cfg.episodes;
    vc.iota_scale = s.c_iota;
    vc.constrain_overflow = s.constrain_overflow;
    vc.indicators = s.indicators;
    if (s.indicators) vc.theta_star = star;
    varlin.emplace(BaseModelSet::from(mdp), std::move(cands), std::move(net), vc);
  } else {
    hoeffding.emplace(BaseModelSet::from(mdp), cfg.hoeffding);
  }

  std::vector<TraceRow> rows;
  rows.reserve(static_cast<std::size_t>(cfg.episodes));
  double cum = 0.0;
  for (int k = 1; k <= cfg.episodes; ++k) {
    TraceRow row;
    row.agent = agent;
    row.seed = seed;
    row.index = k;
    const QTables* q = nullptr;
    const EpisodeTrace* trace = nullptr;
    VarlinEpisode vep;
    HoeffdingEpisode hep;
    if (varlin) {
      const auto inj = varlin->candidates().injected_index();
      const bool star_alive = inj && varlin->candidates().alive(*inj);
      vep = varlin->run_episode(env);
      check_episode(vep, q_star, star, star_alive, cfg.check_optimism);
      row.alive_candidates = vep.alive;
      row.fallback_fired = vep.fallback;
      row.theta_star_member = varlin->membership(star);
      row.indicator_drops = vep.indicator_drops;
      q = &vep.q;
      trace = &vep.trace;
    } else {
      hep = hoeffding->run_episode(env);
      q = &hep.q;
      trace = &hep.trace;
    }
    if (trace->total_reward() > 1.0) throw InvariantViolation("episode reward exceeds 1");
    const double regret = v_star - mdp.policy_value(*q);
    if (regret < -kRegretTolerance) throw InvariantViolation("negative episode regret");
    cum += regret;
    row.instant_regret = regret;
    row.cum_regret = cum;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ExperimentConfig ExperimentConfig::from(const Config& cfg, Mode mode) {
  ExperimentConfig out;
  out.mode = mode;
  if (cfg.has("mode")) {
    const std::string m = cfg.get_string("mode");
    if (m != (mode == Mode::bandit ? "bandit" : "mdp"))
      throw ConfigError("mode", "config is for mode '" + m + "'");
  }
  out.seeds = cfg.get_int_list("seeds");
  if (out.seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  for (const auto s : out.seeds)
    if (s < 0) throw ConfigError("seeds", "seeds must be >= 0");
  const long long master = cfg.get_int("master_seed", 0);
  if (master < 0) throw ConfigError("master_seed", "must be >= 0");
  out.master_seed = static_cast<std::uint64_t>(master);
  out.output = cfg.get_string("output", "");
  out.threads = positive_int(cfg, "threads",
                             std::max(1u, std::thread::hardware_concurrency()));
  out.check_optimism = cfg.get_bool("check_optimism", true);

  if (mode == Mode::bandit) {
    out.agents = cfg.has("agents") ? cfg.get_strings("agents") : std::vector<std::string>{"voful"};
    check_agents(out.agents, {"voful", "oful"});
    out.d = positive_int(cfg, "bandit.d", 2);
    out.rounds = positive_int(cfg, "bandit.rounds", 1000);
    const std::string contexts = cfg.get_string("bandit.contexts", "random_sphere");
    if (contexts == "random_sphere") {
      out.contexts = ContextKind::random_sphere;
      out.arms_per_round = positive_int(cfg, "bandit.arms", 16);
    } else if (contexts == "fixed_arms") {
      out.contexts = ContextKind::fixed_arms;
      const auto flat = cfg.get_doubles("bandit.fixed_arms");
      if (flat.empty() || flat.size() % static_cast<std::size_t>(out.d) != 0)
        throw ConfigError("bandit.fixed_arms", "need a multiple of d coordinates");
      out.fixed_arms = Eigen::Map<const Eigen::MatrixXd>(
          flat.data(), out.d, static_cast<Eigen::Index>(flat.size()) / out.d);
    } else {
      throw ConfigError("bandit.contexts", "unknown context generator '" + contexts + "'");
    }
    const std::string noise = cfg.get_string("bandit.noise", "scaled_rademacher");
    if (noise == "scaled_rademacher") out.noise = NoiseKind::scaled_rademacher;
    else if (noise == "zero") out.noise = NoiseKind::zero;
    else if (noise == "truncated_gaussian") out.noise = NoiseKind::truncated_gaussian;
    else throw ConfigError("bandit.noise", "unknown noise '" + noise + "'");
    const std::string schedule = cfg.get_string("bandit.sigma_schedule", "constant");
    if (schedule == "constant") {
      out.sigma = SigmaSchedule::constant(cfg.get_double("bandit.sigma", 0.1));
    } else if (schedule == "two_phase") {
      out.sigma = SigmaSchedule::two_phase(cfg.get_double("bandit.sigma"),
                                           cfg.get_double("bandit.sigma_second"));
    } else if (schedule == "list") {
      out.sigma = SigmaSchedule::per_round(cfg.get_doubles("bandit.sigma_list"));
    } else {
      throw ConfigError("bandit.sigma_schedule", "unknown schedule '" + schedule + "'");
    }
    if (cfg.has("bandit.theta_star")) {
      out.theta_star = to_vector(cfg.get_doubles("bandit.theta_star"));
      if (out.theta_star->size() != out.d) throw ConfigError("bandit.theta_star", "need d entries");
    }
    out.theta_norm = cfg.get_double("bandit.theta_norm", 0.5);
    if (!(out.theta_norm >= 0.0 && out.theta_norm <= 1.0))
      throw ConfigError("bandit.theta_norm", "must lie in [0, 1]");
    out.voful.delta = probability(cfg, "voful.delta", 0.01);
    out.voful.c_iota = positive(cfg, "voful.c_iota", 1.0);
    out.voful.net_points = positive_int(cfg, "voful.net_points", 128, 2 * out.d);
    out.voful.candidates = positive_int(cfg, "voful.candidates", 1024, 2 * out.d);
    out.voful.inject_theta_star = cfg.get_bool("voful.inject_theta_star", false);
    out.oful = read_ridge(cfg, "oful");
    // Probe construction so instance-level errors surface as config errors.
    try {
      (void)make_bandit_instance(out, out.seeds.front());
    } catch (const PreconditionError& e) {
      throw ConfigError("bandit", e.what());
    }
  } else {
    out.agents = cfg.has("agents") ? cfg.get_strings("agents") : std::vector<std::string>{"varlin"};
    check_agents(out.agents, {"varlin", "hoeffding"});
    out.episodes = positive_int(cfg, "mdp.episodes", 200);
    if (cfg.has("mdp.instance")) {
      out.instance_file = cfg.get_string("mdp.instance");
      const MixtureMDP probe = make_mdp_instance(out, 0);
      out.mdp.dim = probe.dim();
      out.mdp.horizon = probe.horizon();
    } else {
      out.mdp.states = positive_int(cfg, "mdp.states", 4, 3);
      out.mdp.actions = positive_int(cfg, "mdp.actions", 2);
      out.mdp.dim = positive_int(cfg, "mdp.dim", 3);
      out.mdp.horizon = positive_int(cfg, "mdp.horizon", 10);
      out.mdp.branching = positive_int(cfg, "mdp.branching", 2);
      out.mdp.drift = cfg.get_bool("mdp.drift", true);
      if (cfg.has("mdp.theta_star")) {
        out.mdp.theta_star = to_vector(cfg.get_doubles("mdp.theta_star"));
        if (out.mdp.theta_star->size() != out.mdp.dim)
          throw ConfigError("mdp.theta_star", "need mdp.dim entries");
      }
      try {
        (void)make_mdp_instance(out, out.seeds.front());
      } catch (const PreconditionError& e) {
        throw ConfigError("mdp", e.what());
      }
    }
    if (out.mdp.horizon * static_cast<long long>(out.episodes) < 2)
      throw ConfigError("mdp.episodes", "H * K must be >= 2");
    out.varlin.c_iota = positive(cfg, "varlin.c_iota", 1.0);
    out.varlin.net_points = positive_int(cfg, "varlin.net_points", 64, 2 * out.mdp.dim);
    out.varlin.candidates = positive_int(cfg, "varlin.candidates", 512, 2 * out.mdp.dim);
    out.varlin.inject_theta_star = cfg.get_bool("varlin.inject_theta_star", false);
    out.varlin.constrain_overflow = cfg.get_bool("varlin.constrain_overflow", true);
    out.varlin.indicators = cfg.get_bool("varlin.indicators", false);
    out.hoeffding = read_ridge(cfg, "hoeffding");
  }
  cfg.reject_unused();
  return out;
}

BanditInstance make_bandit_instance(const ExperimentConfig& cfg, long long seed) {
  const auto useed = static_cast<std::uint64_t>(seed);
  BanditSpec spec;
  spec.d = cfg.d;
  spec.rounds = cfg.rounds;
  spec.contexts = cfg.contexts;
  spec.fixed_arms = cfg.fixed_arms;
  spec.arms_per_round = cfg.arms_per_round;
  spec.noise = cfg.noise;
  spec.sigma = cfg.sigma;
  spec.seed = derive_seed(cfg.master_seed, useed, "bandit-instance");
  if (cfg.theta_star) {
    spec.theta_star = *cfg.theta_star;
  } else {
    Rng rng(derive_seed(cfg.master_seed, useed, "theta-star"));
    Eigen::VectorXd t(cfg.d);
    do {
      for (int i = 0; i < cfg.d; ++i) t[i] = rng.normal();
    } while (t.norm() == 0.0);
    spec.theta_star = t * (cfg.theta_norm / t.norm());
  }
  return BanditInstance(std::move(spec));
}

MixtureMDP make_mdp_instance(const ExperimentConfig& cfg, long long seed) {
  if (cfg.instance_file) {
    std::ifstream in(*cfg.instance_file);
    if (!in) throw ConfigError("mdp.instance", "cannot open " + cfg.instance_file->string());
    try {
      return MixtureMDP::read_text(in);
    } catch (const std::exception& e) {
      throw ConfigError("mdp.instance", e.what());
    }
  }
  MixtureInstanceSpec spec = cfg.mdp;
  spec.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(seed), "mdp-instance");
  return make_goal_instance(spec);
}

void run_parallel(int tasks, int threads, const std::function<void(int)>& job) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(tasks));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int t = next++; t < tasks; t = next++) {
      try {
        job(t);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min(threads, tasks));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

RegretTrace run_experiment(const ExperimentConfig& cfg) {
  const int na = static_cast<int>(cfg.agents.size());
  const int ns = static_cast<int>(cfg.seeds.size());
  std::vector<std::vector<TraceRow>> parts(static_cast<std::size_t>(na * ns));
  run_parallel(na * ns, cfg.threads, [&](int t) {
    const auto& agent = cfg.agents[static_cast<std::size_t>(t / ns)];
    const long long seed = cfg.seeds[static_cast<std::size_t>(t % ns)];
    parts[static_cast<std::size_t>(t)] =
        cfg.mode == Mode::bandit ? run_bandit(cfg, agent, seed) : run_mdp(cfg, agent, seed);
  });
  RegretTrace trace;
  for (auto& p : parts)
    for (auto& r : p) trace.rows.push_back(std::move(r));
  if (!cfg.output.empty()) trace.write_csv(resolve_output(cfg.output));
  return trace;
}

std::filesystem::path resolve_output(const std::filesystem::path& output) {
  const char* dir = std::getenv("VAB_OUT_DIR");
  if (dir == nullptr || *dir == '\0') return output;
  return std::filesystem::path(dir) / output.filename();
}

}  // namespace vab
