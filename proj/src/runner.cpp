#include "nsp/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "CLI11.hpp"
#include "nsp/kernels.hpp"
#include "nsp/load.hpp"

namespace nsp {

std::string experiment_dir_name(AgentKind agent, double beta) {
  return std::string(to_string(agent)) + "_" + format_beta(beta);
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.runs < 1) throw std::invalid_argument("runs must be >= 1");
  RunSpec probe;
  probe.scenario = spec.scenario;
  probe.agent = spec.agent;
  ExperimentResult result;
  result.dir = spec.out / experiment_dir_name(spec.agent, probe.beta());
  result.runs.resize(static_cast<std::size_t>(spec.runs));

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (int k = next++; k < spec.runs; k = next++) {
      try {
        RunSpec rs;
        rs.scenario = spec.scenario;
        rs.agent = spec.agent;
        rs.run_id = k;
        rs.seed = spec.base_seed + static_cast<std::uint64_t>(k);
        rs.out_dir = result.dir / ("run_" + std::to_string(k));
        rs.keep_checkpoints = spec.keep_checkpoints;
        rs.episode_log = spec.episode_log;
        RunResult r = run_training(rs);
        r.nets.reset();
        result.runs[static_cast<std::size_t>(k)] = std::move(r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  const unsigned n = std::clamp<unsigned>(spec.workers, 1, static_cast<unsigned>(spec.runs));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return result;
}

namespace {

CheckResult check(std::string name, bool ok, std::string detail = {}) {
  return CheckResult{std::move(name), ok, std::move(detail)};
}

template <class F>
CheckResult guarded(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return check(name, false, e.what());
  }
}

}  // namespace

std::vector<CheckResult> validate_scenario(const Scenario& sc, std::uint64_t seed) {
  std::vector<CheckResult> out;
  if (auto errors = sc.validate(); !errors.empty()) {
    for (auto& e : errors) out.push_back(check("scenario", false, e));
    return out;
  }
  out.push_back(check("scenario", true));

  const Psn psn = build_reference_psn(sc.topology);
  out.push_back(guarded("substrate", [&] {
    psn.check_invariants();
    if (!psn.connected()) return check("substrate", false, "graph is not connected");
    if (psn.servers().empty()) return check("substrate", false, "no servers");
    return check("substrate", true,
                 std::to_string(psn.node_count()) + " nodes, " + std::to_string(psn.link_count()) + " links, " +
                     std::to_string(psn.servers().size()) + " servers");
  }));

  out.push_back(guarded("load model", [&] {
    const auto schedule = sc.load_schedule();
    const auto capacity = psn.total_cpu_max();
    for (const auto& seg : schedule.segments) {
      const auto rates = segment_rates(seg, sc.classes, capacity);
      std::vector<double> loads;
      for (std::size_t c = 0; c < sc.classes.size(); ++c) {
        loads.push_back(class_load<double>(static_cast<double>(capacity), rates[c], sc.classes[c].mean_lifespan,
                                           static_cast<double>(sc.classes[c].total_cpu())));
      }
      const double total = global_load<double>(loads);
      if (std::abs(total - seg.load) > 1e-9 * std::max(1.0, seg.load)) {
        return check("load model", false, "segment load " + std::to_string(total) + " != " + std::to_string(seg.load));
      }
    }
    std::string detail = std::to_string(schedule.segments.size()) + " segment(s)";
    if (overloaded(schedule.segments.back().load)) detail += ", final segment overloaded";
    return check("load model", true, detail);
  }));

  const std::int64_t horizon = std::min<std::int64_t>(sc.training.budget, 2 * sc.schedule.phase_size);
  const auto events = generate_events(sc.load_schedule(), sc.classes, psn.total_cpu_max(), horizon, seed);
  out.push_back(guarded("event stream", [&] {
    std::unordered_map<std::int64_t, double> arrivals;
    std::int64_t departures = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      if (i > 0 && e.time < events[i - 1].time) return check("event stream", false, "events out of order");
      if (e.kind == EventKind::Arrival) {
        if (!arrivals.emplace(e.nspr_id, e.time).second) return check("event stream", false, "duplicate arrival");
      } else {
        auto it = arrivals.find(e.nspr_id);
        if (it == arrivals.end() || e.time < it->second) {
          return check("event stream", false, "departure before arrival");
        }
        ++departures;
      }
    }
    if (static_cast<std::int64_t>(arrivals.size()) != departures) {
      return check("event stream", false, "arrival and departure counts differ");
    }
    return check("event stream", true, std::to_string(arrivals.size()) + " arrivals");
  }));

  out.push_back(guarded("capacity conservation", [&] {
    Psn work = psn;
    PlacementEnv env(work);
    std::unordered_map<std::int64_t, PlacementRecord> live;
    std::int64_t accepted = 0;
    std::int64_t episodes = 0;
    std::unordered_set<std::int64_t> kept;
    double t_last = 0.0;
    for (const auto& ev : events) {
      if (ev.kind == EventKind::Departure) {
        if (auto it = live.find(ev.nspr_id); it != live.end()) {
          on_departure(work, it->second);
          live.erase(it);
        }
        continue;
      }
      const auto cls = static_cast<std::size_t>(ev.class_index);
      const Nspr nspr = make_nspr(sc.classes[cls], ev.class_index, ev.nspr_id, ev.time, ev.lifespan);
      ++episodes;
      t_last = ev.time;
      if (heuristic_episode(env, nspr).accepted) {
        ++accepted;
        kept.insert(nspr.id);
        live.emplace(nspr.id, env.take_record());
      }
      work.check_invariants();
    }
    if (!live.empty()) return check("capacity conservation", false, "placements outlived the event stream");
    if (!work.same_capacities(psn)) return check("capacity conservation", false, "residuals differ from initial");
    // offered counts every arrival, carried only what the heuristic admitted
    std::vector<ArrivalEvent> admitted;
    for (const auto& ev : events) {
      if (kept.count(ev.nspr_id)) admitted.push_back(ev);
    }
    const double cap = static_cast<double>(psn.total_cpu_max());
    char loads[96];
    std::snprintf(loads, sizeof loads, ", offered cpu load %.3f, carried %.3f",
                  measured_cpu_load(events, sc.classes, cap, 0.0, t_last),
                  measured_cpu_load(admitted, sc.classes, cap, 0.0, t_last));
    return check("capacity conservation", true,
                 "heuristic accepted " + std::to_string(accepted) + "/" + std::to_string(episodes) + loads);
  }));
  return out;
}

namespace {

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  int runs = 7;
  std::string out = "out";
  std::int64_t budget = -1;
  int rupture_phase = -1;
  double delta_load = std::nan("");
  unsigned workers = 1;
  bool keep_checkpoints = false;
  bool episode_log = false;
};

void add_scenario_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Scenario JSON (defaults when omitted)");
  cmd->add_option("--seed", f.seed, "Base seed; run k uses seed + k");
  cmd->add_option("--budget", f.budget, "Episodes per run")->check(CLI::NonNegativeNumber);
  cmd->add_option("--rupture-phase", f.rupture_phase, "Phase of the load change")->check(CLI::PositiveNumber);
  cmd->add_option("--delta-load", f.delta_load, "Load added at the rupture phase");
}

void add_run_flags(CLI::App* cmd, CommonFlags& f) {
  add_scenario_flags(cmd, f);
  cmd->add_option("--runs", f.runs, "Independent runs")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--workers", f.workers, "Parallel runs")->check(CLI::PositiveNumber);
  cmd->add_flag("--keep-checkpoints", f.keep_checkpoints, "Keep one checkpoint per phase");
  cmd->add_flag("--episode-log", f.episode_log, "Write episodes.jsonl per run");
}

Scenario resolve_scenario(const CommonFlags& f, std::optional<double> beta, std::ostream& err) {
  std::vector<std::string> warnings;
  Scenario sc = f.config.empty() ? Scenario{} : load_scenario(f.config, warnings);
  if (f.budget >= 0) sc.training.budget = f.budget;
  if (f.rupture_phase > 0) sc.schedule.rupture_phase = f.rupture_phase;
  if (!std::isnan(f.delta_load)) sc.schedule.delta_load = f.delta_load;
  if (beta) sc.training.hyper.beta = *beta;
  if (auto errors = sc.validate(); !errors.empty()) throw ScenarioError(std::move(errors));
  if (!f.config.empty() || beta) {
    // re-run the soft checks on the final values
    warnings.clear();
    parse_scenario(dump_scenario(sc), warnings);
  }
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  return sc;
}

void print_summary(std::ostream& out, const ExperimentResult& r) {
  out << "wrote " << r.dir.string() << '\n';
  for (std::size_t k = 0; k < r.runs.size(); ++k) {
    const auto& phases = r.runs[k].phases;
    out << "  run " << k << ": " << phases.size() << " phases";
    if (!phases.empty()) out << ", final TAR " << phases.back().tar;
    out << '\n';
  }
}

std::vector<std::filesystem::path> collect_csvs(const std::vector<std::string>& inputs) {
  std::vector<std::filesystem::path> files;
  for (const auto& in : inputs) {
    const std::filesystem::path p(in);
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto& e : std::filesystem::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().filename() == "phases.csv") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Network slice placement simulator and trainer"};
  app.require_subcommand(1);

  std::string kernels = "auto";
  app.add_option("--kernels", kernels, "Numeric kernels: auto, scalar or avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  CommonFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Heuristic baseline runs");
  add_run_flags(simulate, sim);

  CommonFlags tr;
  std::string agent_name;
  std::optional<double> beta;
  auto* train = app.add_subcommand("train", "Train drl or hadrl agents");
  add_run_flags(train, tr);
  train->add_option("--agent", agent_name, "drl or hadrl")->required()->check(CLI::IsMember({"drl", "hadrl"}));
  train->add_option("--beta", beta, "Shaping exponent for hadrl");

  std::vector<std::string> inputs;
  std::string report_out;
  std::string plot_out;
  int report_rupture = -1;
  int window = 30;
  bool strict = false;
  auto* report = app.add_subcommand("report", "Robustness statistics from phases.csv files");
  report->add_option("inputs", inputs, "phases.csv files or directories searched recursively")->required();
  report->add_option("--out", report_out, "Report CSV path (stdout when omitted)");
  report->add_option("--plot-data", plot_out, "Write per-phase TAR series to this path");
  report->add_option("--rupture-phase", report_rupture, "Override the inferred rupture phase")
      ->check(CLI::PositiveNumber);
  report->add_option("--window", window, "Phases averaged before the rupture")->check(CLI::PositiveNumber);
  report->add_flag("--strict", strict, "Exit nonzero on any warning");

  CommonFlags val;
  bool print_scenario = false;
  auto* validate = app.add_subcommand("validate", "Invariant suite over a scenario");
  add_scenario_flags(validate, val);
  validate->add_flag("--print-scenario", print_scenario, "Print the resolved scenario JSON instead of checking it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  if (kernels != "auto") {
    const auto backend = kernels == "avx2" ? kernels::Backend::Avx2 : kernels::Backend::Scalar;
    if (!kernels::supported(backend)) {
      err << "error: " << kernels << " kernels are not supported on this machine\n";
      return 2;
    }
    kernels::select(backend);
  }

  try {
    if (*simulate || *train) {
      CommonFlags& f = *simulate ? sim : tr;
      ExperimentSpec spec;
      spec.agent = *simulate ? AgentKind::Heu : *parse_agent(agent_name);
      if (beta && spec.agent != AgentKind::Hadrl) err << "warning: --beta only affects hadrl\n";
      spec.scenario = resolve_scenario(f, spec.agent == AgentKind::Hadrl ? beta : std::nullopt, err);
      spec.runs = f.runs;
      spec.base_seed = f.seed;
      spec.out = f.out;
      spec.workers = f.workers;
      spec.keep_checkpoints = f.keep_checkpoints;
      spec.episode_log = f.episode_log;
      print_summary(out, run_experiment(spec));
      return 0;
    }

    if (*report) {
      std::vector<std::string> warnings;
      std::vector<PhaseRow> rows;
      for (const auto& path : collect_csvs(inputs)) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + path.string());
        std::vector<std::string> file_warnings;
        auto part = read_phase_csv(in, file_warnings);
        for (auto& w : file_warnings) warnings.push_back(path.string() + ": " + w);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      if (rows.empty()) throw std::runtime_error("no phase rows found");
      const auto rupture = report_rupture > 0 ? std::optional<int>(report_rupture) : std::nullopt;
      const auto reports = build_reports(rows, rupture, window, warnings);
      if (report_out.empty()) {
        write_report_csv(out, reports);
      } else {
        std::ofstream f(report_out, std::ios::binary | std::ios::trunc);
        write_report_csv(f, reports);
        if (!f) throw std::runtime_error("cannot write " + report_out);
      }
      if (!plot_out.empty()) {
        std::ofstream f(plot_out, std::ios::binary | std::ios::trunc);
        write_plot_data(f, rows, rupture);
        if (!f) throw std::runtime_error("cannot write " + plot_out);
      }
      for (const auto& w : warnings) err << "warning: " << w << '\n';
      return strict && !warnings.empty() ? 1 : 0;
    }

    if (*validate) {
      const Scenario sc = resolve_scenario(val, std::nullopt, err);
      if (print_scenario) {
        out << dump_scenario(sc);
        return 0;
      }
      bool ok = true;
      for (const auto& c : validate_scenario(sc, val.seed)) {
        out << (c.ok ? "ok   " : "FAIL ") << c.name;
        if (!c.detail.empty()) out << ": " << c.detail;
        out << '\n';
        ok = ok && c.ok;
      }
      return ok ? 0 : 1;
    }
  } catch (const ScenarioError& e) {
    for (const auto& msg : e.errors()) err << "error: " << msg << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace nsp
