#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vab {

struct TraceRow {
  std::string agent;
  long long seed = 0;
  int index = 0;  // round or episode, from 1
  double instant_regret = 0.0;
  double cum_regret = 0.0;
  int alive_candidates = 0;  // 0 for agents without a candidate set
  bool fallback_fired = false;
  std::optional<bool> theta_star_member;
  std::optional<int> indicator_drops;
};

/// Rows ordered by (agent, seed, index) as produced by the runner.
struct RegretTrace {
  std::vector<TraceRow> rows;

  static constexpr const char* kSchemaLine = "# schema=1";
  static constexpr const char* kHeader =
      "agent,seed,index,instant_regret,cum_regret,alive_candidates,fallback_fired,"
      "theta_star_member,indicator_drops";

  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
  static RegretTrace read_csv(std::istream& in);
  static RegretTrace read_csv(const std::filesystem::path& path);
};

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

/// Type-7 (linear interpolation) sample quantile of unsorted values.
double quantile(std::vector<double> values, double q);

struct SummaryRow {
  std::string agent;
  int index = 0;
  int seeds = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single seed
};

struct FinalQuantiles {
  std::string agent;
  int seeds = 0;
  double mean = 0.0;
  std::vector<std::pair<double, double>> quantiles;  // (q, value)
};

struct TraceSummary {
  std::vector<SummaryRow> per_index;
  std::vector<FinalQuantiles> finals;

  void write_csv(std::ostream& out) const;
};

/// Per-(agent, index) mean and standard deviation of cum_regret across seeds
/// and final-regret quantiles per agent. Throws EmptyTrace.
TraceSummary aggregate(const RegretTrace& trace,
                       const std::vector<double>& qs = {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0});

}  // namespace vab
