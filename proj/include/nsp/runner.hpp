#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "nsp/training.hpp"

namespace nsp {

struct ExperimentSpec {
  Scenario scenario;
  AgentKind agent = AgentKind::Heu;
  int runs = 7;
  std::uint64_t base_seed = 0;  ///< run k uses base_seed + k
  std::filesystem::path out;
  unsigned workers = 1;
  bool keep_checkpoints = false;
  bool episode_log = false;
};

/// "<agent>_<beta>", e.g. hadrl_2.0 or heu_0.0.
std::string experiment_dir_name(AgentKind agent, double beta);

struct ExperimentResult {
  std::filesystem::path dir;
  std::vector<RunResult> runs;  ///< indexed by run id; networks dropped
};

/// Runs 0..runs-1 on a pool of `workers` threads, each writing
/// out/<agent>_<beta>/run_<k>/. Output does not depend on the worker count.
ExperimentResult run_experiment(const ExperimentSpec& spec);

struct CheckResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

/// Invariant suite behind `validate`: substrate shape and ledger, load
/// identities, event stream sanity and a short heuristic replay that must
/// hand every unit of capacity back.
std::vector<CheckResult> validate_scenario(const Scenario& scenario, std::uint64_t seed);

/// Entry point of the nspctl tool.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace nsp
