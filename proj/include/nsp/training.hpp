#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nsp/agent.hpp"
#include "nsp/metrics.hpp"
#include "nsp/scenario.hpp"

namespace nsp {

enum class AgentKind { Drl, Hadrl, Heu };

const char* to_string(AgentKind kind);
std::optional<AgentKind> parse_agent(const std::string& name);

/// Independent stream seed for one purpose of one run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct RunSpec {
  Scenario scenario;
  AgentKind agent = AgentKind::Heu;
  int run_id = 0;
  std::uint64_t seed = 0;
  /// Where phases.csv, checkpoints/ and the scenario copy go; nothing is
  /// written when unset.
  std::optional<std::filesystem::path> out_dir;
  bool keep_checkpoints = false;  ///< one file per phase instead of the latest only
  bool episode_log = false;       ///< episodes.jsonl next to phases.csv

  /// Scenario hyperparameters with shaping switched on for hadrl.
  Hyper hyper() const;
  /// beta column value: the shaping exponent for hadrl, 0 otherwise.
  double beta() const;
};

struct RunResult {
  std::vector<std::uint8_t> accepted;  ///< per episode, in arrival order
  std::vector<PhaseRow> phases;
  std::optional<ActorCritic> nets;
};

/// Replays the scenario's arrival stream: departures release what their
/// NSPR holds, every arrival is one episode. Stops after `budget` episodes.
RunResult run_training(const RunSpec& spec);

}  // namespace nsp
