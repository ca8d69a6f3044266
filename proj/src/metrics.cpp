#include "nsp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace nsp {

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string out = buf;
  // rounding can leave "-0.00"
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr const char* kPhaseHeader = "run_id,agent,beta,seed,phase,accepted,tar,load_target";

}  // namespace

std::string format_beta(double beta) {
  char buf[64];
  if (beta == std::floor(beta)) {
    std::snprintf(buf, sizeof(buf), "%.1f", beta);
  } else {
    std::snprintf(buf, sizeof(buf), "%g", beta);
  }
  return buf;
}

TarSeries tar_series(std::span<const std::uint8_t> accepted, std::size_t phase_size) {
  if (phase_size == 0) throw std::invalid_argument("phase size must be > 0");
  TarSeries s;
  const std::size_t phases = accepted.size() / phase_size;
  s.dropped = accepted.size() - phases * phase_size;
  for (std::size_t p = 0; p < phases; ++p) {
    std::size_t count = 0;
    for (std::size_t i = p * phase_size; i < (p + 1) * phase_size; ++i) count += accepted[i] ? 1 : 0;
    s.tars.push_back(static_cast<double>(count) / static_cast<double>(phase_size));
  }
  return s;
}

RuptureReport rupture_report(std::span<const double> tars, int rupture_phase, int window) {
  if (rupture_phase < 1 || static_cast<std::size_t>(rupture_phase) >= tars.size()) {
    throw std::out_of_range("rupture phase " + std::to_string(rupture_phase) + " outside [1, " +
                            std::to_string(tars.size()) + ")");
  }
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  RuptureReport r;
  r.rupture_phase = rupture_phase;
  r.window = std::min(window, rupture_phase);
  r.rupture_tar = tars[static_cast<std::size_t>(rupture_phase)];
  r.last_tar = tars[static_cast<std::size_t>(rupture_phase - 1)];

  const auto begin = static_cast<std::size_t>(rupture_phase - r.window);
  const auto end = static_cast<std::size_t>(rupture_phase);
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += tars[i];
  r.avg_tar = sum / r.window;
  double sq = 0.0;
  for (std::size_t i = begin; i < end; ++i) sq += (tars[i] - r.avg_tar) * (tars[i] - r.avg_tar);
  r.tar_std = std::sqrt(sq / r.window);
  r.gap_avg = r.rupture_tar - r.avg_tar;
  r.gap_last = r.rupture_tar - r.last_tar;
  return r;
}

void write_phase_csv_header(std::ostream& out) {
  out << kPhaseHeader << '\n';
}

void write_phase_csv(std::ostream& out, std::span<const PhaseRow> rows) {
  for (const auto& r : rows) {
    out << r.run_id << ',' << r.agent << ',' << format_beta(r.beta) << ',' << r.seed << ',' << r.phase << ','
        << r.accepted << ',' << fixed(r.tar) << ',' << fixed(r.load_target) << '\n';
  }
}

std::vector<PhaseRow> read_phase_csv(std::istream& in, std::vector<std::string>& warnings) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("phase CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPhaseHeader) throw std::runtime_error("unexpected phase CSV header: " + line);

  std::vector<PhaseRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 8) {
      warnings.push_back("line " + std::to_string(lineno) + ": expected 8 fields, got " + std::to_string(cells.size()));
      continue;
    }
    try {
      PhaseRow r;
      r.run_id = std::stoi(cells[0]);
      r.agent = cells[1];
      r.beta = std::stod(cells[2]);
      r.seed = std::stoull(cells[3]);
      r.phase = std::stoi(cells[4]);
      r.accepted = std::stoi(cells[5]);
      r.tar = std::stod(cells[6]);
      r.load_target = std::stod(cells[7]);
      if (r.agent.empty()) throw std::invalid_argument("empty agent");
      if (r.accepted < 0 || r.tar < 0.0 || r.tar > 1.0) throw std::invalid_argument("out of range");
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      warnings.push_back("line " + std::to_string(lineno) + ": unparseable row (" + e.what() + ")");
    }
  }
  return rows;
}

std::optional<int> infer_rupture_phase(std::span<const PhaseRow> run) {
  for (std::size_t i = 1; i < run.size(); ++i) {
    if (run[i].load_target != run[i - 1].load_target) return run[i].phase;
  }
  return std::nullopt;
}

std::vector<RunReport> build_reports(std::span<const PhaseRow> rows, std::optional<int> rupture_phase, int window,
                                     std::vector<std::string>& warnings) {
  using Key = std::tuple<std::string, double, int, std::uint64_t>;
  std::vector<Key> order;
  std::map<Key, std::vector<PhaseRow>> runs;
  for (const auto& r : rows) {
    Key key{r.agent, r.beta, r.run_id, r.seed};
    auto [it, inserted] = runs.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r);
  }

  std::vector<RunReport> out;
  std::vector<std::pair<std::string, double>> agent_order;
  std::map<std::pair<std::string, double>, std::vector<RuptureReport>> per_agent;
  for (const auto& key : order) {
    auto& run = runs[key];
    std::sort(run.begin(), run.end(), [](const PhaseRow& a, const PhaseRow& b) { return a.phase < b.phase; });
    const auto& [agent, beta, run_id, seed] = key;
    const std::string label = agent + " beta=" + format_beta(beta) + " run=" + std::to_string(run_id);

    bool contiguous = true;
    for (std::size_t i = 0; i < run.size(); ++i) contiguous = contiguous && run[i].phase == static_cast<int>(i);
    if (!contiguous) {
      warnings.push_back(label + ": phases are not contiguous from 0, skipped");
      continue;
    }
    const auto rupture = rupture_phase ? rupture_phase : infer_rupture_phase(run);
    if (!rupture) {
      warnings.push_back(label + ": no load change found; pass a rupture phase");
      continue;
    }
    std::vector<double> tars;
    for (const auto& r : run) tars.push_back(r.tar);
    try {
      RunReport rr{agent, beta, std::to_string(run_id), std::to_string(seed), rupture_report(tars, *rupture, window)};
      auto akey = std::make_pair(agent, beta);
      if (!per_agent.contains(akey)) agent_order.push_back(akey);
      per_agent[akey].push_back(rr.report);
      out.push_back(std::move(rr));
    } catch (const std::exception& e) {
      warnings.push_back(label + ": " + e.what());
    }
  }

  for (const auto& akey : agent_order) {
    const auto& reports = per_agent[akey];
    RuptureReport mean;
    mean.rupture_phase = reports.front().rupture_phase;
    mean.window = reports.front().window;
    for (const auto& r : reports) {
      mean.rupture_tar += r.rupture_tar;
      mean.last_tar += r.last_tar;
      mean.avg_tar += r.avg_tar;
      mean.tar_std += r.tar_std;
      mean.gap_avg += r.gap_avg;
      mean.gap_last += r.gap_last;
    }
    const auto n = static_cast<double>(reports.size());
    mean.rupture_tar /= n;
    mean.last_tar /= n;
    mean.avg_tar /= n;
    mean.tar_std /= n;
    mean.gap_avg /= n;
    mean.gap_last /= n;
    out.push_back(RunReport{akey.first, akey.second, "mean", "", mean});
  }
  return out;
}

void write_report_csv(std::ostream& out, std::span<const RunReport> reports) {
  out << "agent,beta,run_id,seed,rupture_phase,window,rupture_tar,last_tar,avg_tar,tar_std,"
         "rupture_minus_avg_pct,rupture_minus_last_pct,tar_std_pct\n";
  for (const auto& r : reports) {
    const auto& m = r.report;
    out << r.agent << ',' << format_beta(r.beta) << ',' << r.run_id << ',' << r.seed << ',' << m.rupture_phase << ','
        << m.window << ',' << fixed(m.rupture_tar) << ',' << fixed(m.last_tar) << ',' << fixed(m.avg_tar) << ','
        << fixed(m.tar_std) << ',' << fixed(100.0 * m.gap_avg, 2) << ',' << fixed(100.0 * m.gap_last, 2) << ','
        << fixed(100.0 * m.tar_std, 2) << '\n';
  }
}

void write_plot_data(std::ostream& out, std::span<const PhaseRow> rows, std::optional<int> rupture_phase) {
  using Key = std::tuple<std::string, double, int, std::uint64_t>;
  std::vector<Key> order;
  std::map<Key, std::vector<PhaseRow>> runs;
  for (const auto& r : rows) {
    Key key{r.agent, r.beta, r.run_id, r.seed};
    auto [it, inserted] = runs.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r);
  }
  bool first = true;
  for (const auto& key : order) {
    auto& run = runs[key];
    std::sort(run.begin(), run.end(), [](const PhaseRow& a, const PhaseRow& b) { return a.phase < b.phase; });
    const auto rupture = rupture_phase ? rupture_phase : infer_rupture_phase(run);
    if (!first) out << "\n\n";
    first = false;
    out << "# agent=" << std::get<0>(key) << " beta=" << format_beta(std::get<1>(key)) << " run=" << std::get<2>(key)
        << " seed=" << std::get<3>(key) << " rupture_phase=" << (rupture ? std::to_string(*rupture) : "none") << '\n';
    for (const auto& r : run) out << r.phase << ' ' << fixed(r.tar) << '\n';
  }
}

}  // namespace nsp
