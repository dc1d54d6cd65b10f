#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vab/concentration.hpp"
#include "vab/harness/config.hpp"

namespace vab {

struct ConcentrationSuiteConfig {
  long trials = 10000;
  std::vector<long long> seeds{0, 1, 2};
  std::uint64_t master_seed = 0;
  int threads = 1;
  std::string output;

  static ConcentrationSuiteConfig from(const Config& cfg);
};

struct ConcentrationCase {
  std::string verifier;
  MartingaleSpec spec;
  double delta = 0.0;
  double extra = 0.0;  // c for the upper tail, eps for Freedman
  long long seed = 0;
  VerifierReport report;
};

/// Every verifier against the in-hypothesis processes it applies to.
std::vector<ConcentrationCase> concentration_cases(const ConcentrationSuiteConfig& cfg);
void run_concentration_suite(std::vector<ConcentrationCase>& cases,
                             const ConcentrationSuiteConfig& cfg);
void write_concentration_csv(std::ostream& out, const std::vector<ConcentrationCase>& cases);

struct PotentialSuiteConfig {
  std::vector<long long> dims{1, 2, 4, 8};
  std::vector<long long> lengths{100, 1000, 5000};
  int random_count = 200;
  int adversarial_count = 20;
  int probes = 16;
  std::uint64_t master_seed = 0;
  int threads = 1;
  std::string output;

  static PotentialSuiteConfig from(const Config& cfg);
};

struct PotentialCase {
  int d = 0;
  int t = 0;
  double level = 0.0;
  std::string level_label;  // "1", "0.1" or "1/t"
  bool adversarial = false;
  int index = 0;
  double sum = 0.0;
  double bound = 0.0;

  bool violated() const { return sum > bound; }
};

/// Clipped elliptical sums over the (d, t, level) sweep.
std::vector<PotentialCase> run_potential_suite(const PotentialSuiteConfig& cfg);
void write_potential_csv(std::ostream& out, const std::vector<PotentialCase>& cases);

}  // namespace vab
