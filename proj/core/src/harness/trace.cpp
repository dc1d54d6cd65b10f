#include "vab/harness/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "vab/errors.hpp"

namespace vab {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_field(const std::string& text, int lineno, const char* column) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end)
    throw IoError("trace line " + std::to_string(lineno) + ": bad " + column + " '" + text + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

void RegretTrace::write_csv(std::ostream& out) const {
  out << kSchemaLine << '\n' << kHeader << '\n';
  for (const auto& r : rows) {
    out << r.agent << ',' << r.seed << ',' << r.index << ',' << format_double(r.instant_regret)
        << ',' << format_double(r.cum_regret) << ',' << r.alive_candidates << ','
        << (r.fallback_fired ? 1 : 0) << ',';
    if (r.theta_star_member) out << (*r.theta_star_member ? 1 : 0);
    out << ',';
    if (r.indicator_drops) out << *r.indicator_drops;
    out << '\n';
  }
}

void RegretTrace::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out);
  if (!out) throw IoError("write failed for " + path.string());
}

RegretTrace RegretTrace::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSchemaLine) throw IoError("trace: missing '# schema=1'");
  if (!std::getline(in, line) || line != kHeader) throw IoError("trace: unexpected header");
  RegretTrace trace;
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) throw IoError("trace line " + std::to_string(lineno) + ": expected 9 fields");
    TraceRow r;
    r.agent = f[0];
    r.seed = parse_field<long long>(f[1], lineno, "seed");
    r.index = parse_field<int>(f[2], lineno, "index");
    r.instant_regret = parse_field<double>(f[3], lineno, "instant_regret");
    r.cum_regret = parse_field<double>(f[4], lineno, "cum_regret");
    r.alive_candidates = parse_field<int>(f[5], lineno, "alive_candidates");
    r.fallback_fired = parse_field<int>(f[6], lineno, "fallback_fired") != 0;
    if (!f[7].empty()) r.theta_star_member = parse_field<int>(f[7], lineno, "theta_star_member") != 0;
    if (!f[8].empty()) r.indicator_drops = parse_field<int>(f[8], lineno, "indicator_drops");
    trace.rows.push_back(std::move(r));
  }
  return trace;
}

RegretTrace RegretTrace::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_csv(in);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyTrace();
  if (!(q >= 0.0 && q <= 1.0)) throw PreconditionError("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

TraceSummary aggregate(const RegretTrace& trace, const std::vector<double>& qs) {
  if (trace.rows.empty()) throw EmptyTrace();
  // agent -> index -> values in seed order; agent -> seed -> final.
  std::map<std::string, std::map<int, std::vector<double>>> by_index;
  std::map<std::string, std::map<long long, std::pair<int, double>>> finals;
  std::vector<std::string> agents;
  for (const auto& r : trace.rows) {
    if (!by_index.count(r.agent)) agents.push_back(r.agent);
    by_index[r.agent][r.index].push_back(r.cum_regret);
    auto& f = finals[r.agent][r.seed];
    if (r.index >= f.first) f = {r.index, r.cum_regret};
  }

  TraceSummary out;
  for (const auto& agent : agents) {
    for (const auto& [index, values] : by_index[agent]) {
      SummaryRow row;
      row.agent = agent;
      row.index = index;
      row.seeds = static_cast<int>(values.size());
      double sum = 0.0;
      for (const double v : values) sum += v;
      row.mean = sum / row.seeds;
      if (row.seeds > 1) {
        double ss = 0.0;
        for (const double v : values) ss += (v - row.mean) * (v - row.mean);
        row.stddev = std::sqrt(ss / (row.seeds - 1));
      }
      out.per_index.push_back(row);
    }
    std::vector<double> last;
    for (const auto& [seed, f] : finals[agent]) last.push_back(f.second);
    FinalQuantiles fq;
    fq.agent = agent;
    fq.seeds = static_cast<int>(last.size());
    double sum = 0.0;
    for (const double v : last) sum += v;
    fq.mean = sum / fq.seeds;
    for (const double q : qs) fq.quantiles.emplace_back(q, quantile(last, q));
    out.finals.push_back(std::move(fq));
  }
  return out;
}

void TraceSummary::write_csv(std::ostream& out) const {
  out << RegretTrace::kSchemaLine << '\n';
  out << "agent,index,seeds,mean_cum_regret,std_cum_regret\n";
  for (const auto& r : per_index)
    out << r.agent << ',' << r.index << ',' << r.seeds << ',' << format_double(r.mean) << ','
        << format_double(r.stddev) << '\n';
  out << "# final\n";
  out << "agent,seeds,mean_final,quantile,value\n";
  for (const auto& f : finals)
    for (const auto& [q, v] : f.quantiles)
      out << f.agent << ',' << f.seeds << ',' << format_double(f.mean) << ',' << format_double(q)
          << ',' << format_double(v) << '\n';
}

}  // namespace vab
