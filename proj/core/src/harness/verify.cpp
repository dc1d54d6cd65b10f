#include "vab/harness/verify.hpp"

#include <algorithm>
#include <ostream>
#include <thread>

#include "vab/errors.hpp"
#include "vab/harness/experiment.hpp"
#include "vab/harness/trace.hpp"
#include "vab/potentials.hpp"

namespace vab {
namespace {

int read_threads(const Config& cfg) {
  const long long t = cfg.get_int("threads", std::max(1u, std::thread::hardware_concurrency()));
  if (t < 1) throw ConfigError("threads", "must be >= 1");
  return static_cast<int>(t);
}

std::uint64_t read_master(const Config& cfg) {
  const long long m = cfg.get_int("master_seed", 0);
  if (m < 0) throw ConfigError("master_seed", "must be >= 0");
  return static_cast<std::uint64_t>(m);
}

}  // namespace

ConcentrationSuiteConfig ConcentrationSuiteConfig::from(const Config& cfg) {
  ConcentrationSuiteConfig out;
  if (cfg.has("mode") && cfg.get_string("mode") != "verify_concentration")
    throw ConfigError("mode", "expected verify_concentration");
  out.trials = cfg.get_int("verify.trials", 10000);
  if (out.trials < 1000) throw ConfigError("verify.trials", "must be >= 1000");
  if (cfg.has("seeds")) out.seeds = cfg.get_int_list("seeds");
  if (out.seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  out.master_seed = read_master(cfg);
  out.threads = read_threads(cfg);
  out.output = cfg.get_string("output", "");
  cfg.reject_unused();
  return out;
}

std::vector<ConcentrationCase> concentration_cases(const ConcentrationSuiteConfig& cfg) {
  std::vector<ConcentrationCase> out;
  const auto add = [&](const std::string& verifier, const MartingaleSpec& spec, double delta,
                       double extra) {
    for (const long long seed : cfg.seeds) {
      ConcentrationCase c;
      c.verifier = verifier;
      c.spec = spec;
      c.delta = delta;
      c.extra = extra;
      c.seed = seed;
      out.push_back(c);
    }
  };
  for (const int n : {16, 64}) {
    const double delta = n == 16 ? 0.01 : 0.005;
    add("empirical_bernstein", MartingaleSpec::rademacher(n), delta, 0.0);
    add("empirical_bernstein", MartingaleSpec::centered_bernoulli(n, 0.1), delta, 0.0);
    add("empirical_bernstein", MartingaleSpec::sign_feedback(n), delta, 0.0);
    add("empirical_bernstein", MartingaleSpec::scaled_uniform(n, 0.5), delta, 0.0);
  }
  add("empirical_bernstein", MartingaleSpec::zero(16), 0.01, 0.0);

  for (const auto& spec :
       {MartingaleSpec::rademacher(64), MartingaleSpec::centered_bernoulli(64, 0.1),
        MartingaleSpec::bernoulli(64, 0.3), MartingaleSpec::adaptive_bernoulli(64, 0.4),
        MartingaleSpec::sign_feedback(64), MartingaleSpec::scaled_uniform(64, 1.0)})
    add("second_moment", spec, 0.05, 0.0);

  for (const auto& spec : {MartingaleSpec::bernoulli(200, 0.05), MartingaleSpec::bernoulli(200, 0.5),
                           MartingaleSpec::adaptive_bernoulli(200, 0.1)})
    add("upper_tail", spec, 0.1, 1.0);

  for (const auto& spec : {MartingaleSpec::rademacher(100), MartingaleSpec::centered_bernoulli(100, 0.05),
                           MartingaleSpec::sign_feedback(100), MartingaleSpec::scaled_uniform(100, 1.0)})
    add("freedman", spec, 0.01, 1.0);

  for (const auto& spec : {MartingaleSpec::rademacher(100), MartingaleSpec::centered_bernoulli(100, 0.5),
                           MartingaleSpec::sign_feedback(100), MartingaleSpec::scaled_uniform(100, 1.0)})
    add("azuma", spec, 0.05, 0.0);
  return out;
}

void run_concentration_suite(std::vector<ConcentrationCase>& cases,
                             const ConcentrationSuiteConfig& cfg) {
  run_parallel(static_cast<int>(cases.size()), cfg.threads, [&](int i) {
    auto& c = cases[static_cast<std::size_t>(i)];
    const std::uint64_t seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(c.seed),
                                           c.verifier + "/" + c.spec.name() + "/" +
                                               std::to_string(c.spec.n));
    if (c.verifier == "empirical_bernstein")
      c.report = verify_empirical_bernstein(c.spec, c.delta, cfg.trials, seed);
    else if (c.verifier == "second_moment")
      c.report = verify_second_moment_bound(c.spec, c.delta, cfg.trials, seed);
    else if (c.verifier == "upper_tail")
      c.report = verify_upper_tail(c.spec, c.extra, c.delta, cfg.trials, seed);
    else if (c.verifier == "freedman")
      c.report = verify_freedman(c.spec, c.delta, c.extra, cfg.trials, seed);
    else if (c.verifier == "azuma")
      c.report = verify_azuma(c.spec, c.delta, cfg.trials, seed);
    else
      throw PreconditionError("unknown verifier " + c.verifier);
  });
}

void write_concentration_csv(std::ostream& out, const std::vector<ConcentrationCase>& cases) {
  out << RegretTrace::kSchemaLine << '\n';
  out << "verifier,process,n,param,delta,extra,seed,trials,failures,failure_rate,stated_bound,"
         "vacuous,rhs_p95,within_bound\n";
  for (const auto& c : cases) {
    const auto& r = c.report;
    out << c.verifier << ',' << c.spec.name() << ',' << c.spec.n << ',' << format_double(c.spec.param)
        << ',' << format_double(c.delta) << ',' << format_double(c.extra) << ',' << c.seed << ','
        << r.trials << ',' << r.failures << ',' << format_double(r.failure_rate) << ','
        << format_double(r.stated_bound) << ',' << (r.bound_vacuous ? 1 : 0) << ','
        << format_double(r.rhs_percentile_95) << ',' << (r.within_bound() ? 1 : 0) << '\n';
  }
}

PotentialSuiteConfig PotentialSuiteConfig::from(const Config& cfg) {
  PotentialSuiteConfig out;
  if (cfg.has("mode") && cfg.get_string("mode") != "verify_potential")
    throw ConfigError("mode", "expected verify_potential");
  if (cfg.has("potential.dims")) out.dims = cfg.get_int_list("potential.dims");
  if (cfg.has("potential.lengths")) out.lengths = cfg.get_int_list("potential.lengths");
  for (const auto d : out.dims)
    if (d < 1) throw ConfigError("potential.dims", "must be >= 1");
  for (const auto t : out.lengths)
    if (t < 2) throw ConfigError("potential.lengths", "must be >= 2");
  out.random_count = static_cast<int>(cfg.get_int("potential.random", 200));
  out.adversarial_count = static_cast<int>(cfg.get_int("potential.adversarial", 20));
  out.probes = static_cast<int>(cfg.get_int("potential.probes", 16));
  if (out.random_count < 0 || out.adversarial_count < 0)
    throw ConfigError("potential", "sequence counts must be >= 0");
  if (out.probes < 16) throw ConfigError("potential.probes", "must be >= 16");
  out.master_seed = read_master(cfg);
  out.threads = read_threads(cfg);
  out.output = cfg.get_string("output", "");
  cfg.reject_unused();
  return out;
}

std::vector<PotentialCase> run_potential_suite(const PotentialSuiteConfig& cfg) {
  std::vector<PotentialCase> cases;
  for (const auto d : cfg.dims)
    for (const auto t : cfg.lengths)
      for (int lv = 0; lv < 3; ++lv)
        for (int adv = 0; adv < 2; ++adv) {
          const int count = adv ? cfg.adversarial_count : cfg.random_count;
          for (int i = 0; i < count; ++i) {
            PotentialCase c;
            c.d = static_cast<int>(d);
            c.t = static_cast<int>(t);
            c.level = lv == 0 ? 1.0 : lv == 1 ? 0.1 : 1.0 / static_cast<double>(t);
            c.level_label = lv == 0 ? "1" : lv == 1 ? "0.1" : "1/t";
            c.adversarial = adv != 0;
            c.index = i;
            cases.push_back(c);
          }
        }
  run_parallel(static_cast<int>(cases.size()), cfg.threads, [&](int k) {
    auto& c = cases[static_cast<std::size_t>(k)];
    const std::uint64_t seed = derive_seed(
        cfg.master_seed, static_cast<std::uint64_t>(c.index),
        (c.adversarial ? "adversarial/" : "random/") + std::to_string(c.d) + "/" +
            std::to_string(c.t) + "/" + c.level_label);
    const SequencePair sp = c.adversarial
                                ? greedy_adversary(c.d, c.t, c.level, cfg.probes, seed)
                                : random_sequence(c.d, c.t, c.level, seed);
    c.sum = clipped_elliptical_sum(sp);
    c.bound = elliptical_bound(c.d, c.t, c.level);
  });
  return cases;
}

void write_potential_csv(std::ostream& out, const std::vector<PotentialCase>& cases) {
  out << RegretTrace::kSchemaLine << '\n';
  out << "d,t,level,level_label,kind,index,sum,bound,violated\n";
  for (const auto& c : cases)
    out << c.d << ',' << c.t << ',' << format_double(c.level) << ',' << c.level_label << ','
        << (c.adversarial ? "adversarial" : "random") << ',' << c.index << ','
        << format_double(c.sum) << ',' << format_double(c.bound) << ',' << (c.violated() ? 1 : 0)
        << '\n';
}

}  // namespace vab
