// vab: run bandit / mixture-MDP experiments, verifier suites, and trace
// aggregation from key=value config files.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vab/errors.hpp"
#include "vab/harness/config.hpp"
#include "vab/harness/experiment.hpp"
#include "vab/harness/trace.hpp"
#include "vab/harness/verify.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

vab::Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  vab::Config cfg = vab::Config::load(path);
  for (const auto& o : overrides) cfg.set_assignment(o);
  return cfg;
}

void print_finals(const vab::RegretTrace& trace) {
  for (const auto& f : vab::aggregate(trace).finals)
    std::cout << f.agent << ": seeds=" << f.seeds << " mean_final_regret=" << vab::format_double(f.mean)
              << '\n';
}

int run_mode(vab::Mode mode, const std::string& path, const std::vector<std::string>& overrides) {
  const auto cfg = vab::ExperimentConfig::from(load_config(path, overrides), mode);
  const auto trace = vab::run_experiment(cfg);
  if (!cfg.output.empty()) std::cout << "wrote " << vab::resolve_output(cfg.output).string() << '\n';
  else trace.write_csv(std::cout);
  print_finals(trace);
  return 0;
}

template <typename WriteFn>
void emit(const std::string& output, WriteFn&& write) {
  if (output.empty()) {
    write(std::cout);
    return;
  }
  const auto path = vab::resolve_output(output);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw vab::IoError("cannot write " + path.string());
  write(out);
  std::cout << "wrote " << path.string() << '\n';
}

int verify_concentration(const std::string& path, const std::vector<std::string>& overrides) {
  const auto cfg = vab::ConcentrationSuiteConfig::from(load_config(path, overrides));
  auto cases = vab::concentration_cases(cfg);
  vab::run_concentration_suite(cases, cfg);
  emit(cfg.output, [&](std::ostream& out) { vab::write_concentration_csv(out, cases); });
  int bad = 0;
  for (const auto& c : cases) bad += c.report.within_bound() ? 0 : 1;
  std::cout << "concentration: " << cases.size() << " cases, " << bad << " outside bound\n";
  return bad == 0 ? 0 : kExitInvariant;
}

int verify_potential(const std::string& path, const std::vector<std::string>& overrides) {
  const auto cfg = vab::PotentialSuiteConfig::from(load_config(path, overrides));
  const auto cases = vab::run_potential_suite(cfg);
  emit(cfg.output, [&](std::ostream& out) { vab::write_potential_csv(out, cases); });
  int bad = 0;
  for (const auto& c : cases) bad += c.violated() ? 1 : 0;
  std::cout << "potential: " << cases.size() << " sequences, " << bad << " violations\n";
  return bad == 0 ? 0 : kExitInvariant;
}

int aggregate(const std::string& csv, const std::string& output) {
  const auto summary = vab::aggregate(vab::RegretTrace::read_csv(std::filesystem::path(csv)));
  emit(output, [&](std::ostream& out) { summary.write_csv(out); });
  return 0;
}

int export_mdp(const std::string& path, const std::vector<std::string>& overrides, long long seed,
               const std::string& output) {
  const auto cfg = vab::ExperimentConfig::from(load_config(path, overrides), vab::Mode::mdp);
  const auto mdp = vab::make_mdp_instance(cfg, seed);
  emit(output, [&](std::ostream& out) { mdp.write_text(out); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variance-aware bandit and mixture-MDP experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  const auto add_run = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "key=value config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "override a config key (key=value)");
  };

  auto* bandit = app.add_subcommand("bandit", "linear bandit experiments");
  bandit->require_subcommand(1);
  auto* bandit_run = bandit->add_subcommand("run", "run a bandit config");
  add_run(bandit_run);

  auto* mdp = app.add_subcommand("mdp", "linear mixture MDP experiments");
  mdp->require_subcommand(1);
  auto* mdp_run = mdp->add_subcommand("run", "run an MDP config");
  add_run(mdp_run);
  auto* mdp_export = mdp->add_subcommand("export", "write one seed's instance as a text table");
  add_run(mdp_export);
  long long export_seed = 0;
  std::string export_out;
  mdp_export->add_option("--seed", export_seed, "seed whose instance to export");
  mdp_export->add_option("--out", export_out, "output path (stdout if omitted)");

  auto* verify = app.add_subcommand("verify", "Monte-Carlo and sweep verifiers");
  verify->require_subcommand(1);
  auto* verify_conc = verify->add_subcommand("concentration", "martingale inequality verifiers");
  add_run(verify_conc);
  auto* verify_pot = verify->add_subcommand("potential", "elliptical potential sweep");
  add_run(verify_pot);

  auto* agg = app.add_subcommand("aggregate", "summarize a regret trace CSV");
  std::string csv_path, agg_out;
  agg->add_option("csv", csv_path, "trace CSV")->required()->check(CLI::ExistingFile);
  agg->add_option("--out", agg_out, "output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (bandit_run->parsed()) return run_mode(vab::Mode::bandit, config_path, overrides);
    if (mdp_run->parsed()) return run_mode(vab::Mode::mdp, config_path, overrides);
    if (mdp_export->parsed()) return export_mdp(config_path, overrides, export_seed, export_out);
    if (verify_conc->parsed()) return verify_concentration(config_path, overrides);
    if (verify_pot->parsed()) return verify_potential(config_path, overrides);
    if (agg->parsed()) return aggregate(csv_path, agg_out);
  } catch (const vab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const vab::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
