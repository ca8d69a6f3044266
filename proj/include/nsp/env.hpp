#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nsp/slice.hpp"
#include "nsp/topology.hpp"

namespace nsp {

/// What the agent sees before placing VNF `vnf_index` (1-based) of the
/// pending NSPR.
struct State {
  std::vector<Units> cpu;  ///< residual per node
  std::vector<Units> ram;
  std::vector<Units> bw;   ///< sum of residual bandwidth of incident links
  std::vector<int> chi;    ///< VNFs of the pending NSPR already on each node
  Units req_cpu = 0;
  Units req_ram = 0;
  Units req_bw = 0;        ///< sum over VLs incident to the current VNF
  Units vl_bw = 0;         ///< bandwidth of VL (v-1, v); 0 for the first VNF
  int remaining = 0;       ///< |V| - v + 1
  int vnf_index = 1;
  int vnf_count = 0;
  std::optional<NodeId> prev_host;
};

struct StepDeltas {
  double acceptance = 0.0;    ///< +100 / -100
  double load_balance = 0.0;  ///< cpu/M_cpu + ram/M_ram after allocation
  double consumption = 0.0;   ///< 1/|P|, 1 when |P| = 0 or for the first VNF

  bool operator==(const StepDeltas&) const = default;
};

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
  bool accepted = false;
  bool success = false;  ///< this action placed its VNF
  StepDeltas deltas;
  std::size_t hops = 0;
};

/// One finished episode, as emitted in the JSON-lines episode log.
struct EpisodeLog {
  std::int64_t nspr_id = 0;
  std::string nspr_class;
  std::vector<NodeId> actions;
  std::vector<StepDeltas> deltas;
  std::vector<std::size_t> hops;
  double raw_reward = 0.0;
  double reward = 0.0;  ///< normalized
  bool accepted = false;
};

void write_json_line(std::ostream& out, const EpisodeLog& log);

/// Positive rewards scaled by 10 / (200 |V|) into [0, 10]; negative ones
/// divided by 10.
double normalize_reward(double raw, int vnf_count);

/// Sequential placement of one NSPR on a shared substrate.
///
/// An action is any node id. It succeeds when the node is a server with
/// enough CPU and RAM and, past the first VNF, a bandwidth-feasible path to
/// the previous VNF's host exists. A failed action ends the episode with
/// reward -100 and rolls back everything this NSPR had reserved.
class PlacementEnv {
 public:
  explicit PlacementEnv(Psn& psn) : psn_(&psn) {}

  const State& reset(const Nspr& nspr);
  StepOutcome step(NodeId action);

  const State& state() const { return state_; }
  bool active() const { return active_; }
  const Nspr& nspr() const { return nspr_; }
  const Psn& psn() const { return *psn_; }
  const EpisodeLog& log() const { return log_; }

  /// Reservations of the last accepted NSPR; hand this to `on_departure`.
  PlacementRecord take_record();

 private:
  void refresh_state();
  void fail(StepOutcome& out);

  Psn* psn_;
  Nspr nspr_;
  State state_;
  PlacementRecord record_;
  EpisodeLog log_;
  bool active_ = false;
};

/// Lifespan expiry of an accepted NSPR.
void on_departure(Psn& psn, PlacementRecord& record);

}  // namespace nsp
