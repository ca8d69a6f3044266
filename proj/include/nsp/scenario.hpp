#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsp/agent.hpp"
#include "nsp/load.hpp"
#include "nsp/slice.hpp"
#include "nsp/topology.hpp"

namespace nsp {

inline constexpr int kScenarioVersion = 1;

struct Schedule {
  double baseline_load = 0.4;
  int rupture_phase = 72;  ///< phase index at which delta_load is added
  double delta_load = 0.0;
  int phase_size = 500;

  std::int64_t rupture_episode() const { return static_cast<std::int64_t>(rupture_phase) * phase_size; }
  bool operator==(const Schedule&) const = default;
};

struct TrainingConfig {
  std::int64_t budget = 54000;  ///< episodes = NSPR arrivals
  int gcn_width = 60;
  int gcn_depth = 3;
  Hyper hyper;

  bool operator==(const TrainingConfig&) const = default;
};

/// Everything a run needs. Default-constructed values are the reference
/// experiment: 147-node substrate, Volatile and Long-term classes splitting
/// a 40% CPU load, 108 phases of 500 episodes.
struct Scenario {
  int version = kScenarioVersion;
  TopologyConfig topology;
  std::vector<NsprClass> classes{volatile_class(), long_term_class()};
  Schedule schedule;
  TrainingConfig training;

  std::vector<double> shares() const;
  LoadSchedule load_schedule() const;
  /// Every problem found; empty when valid.
  std::vector<std::string> validate() const;

  bool operator==(const Scenario&) const = default;
};

/// All schema violations of a scenario file, not just the first.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Parses scenario JSON; omitted fields take their defaults. Soft problems
/// (unknown keys, untested beta values) go to `warnings`.
Scenario parse_scenario(const std::string& text, std::vector<std::string>& warnings);
Scenario load_scenario(const std::filesystem::path& path, std::vector<std::string>& warnings);
std::string dump_scenario(const Scenario& scenario);

/// The reduced desk-scale substrate: one CDC of 4 servers and two EDCs of
/// 2 servers each (11 nodes), 20 phases, load change slot at phase 12.
Scenario reduced_scenario();

}  // namespace nsp
