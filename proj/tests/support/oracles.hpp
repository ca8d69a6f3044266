#pragma once

// Independent re-implementations used as test oracles. Nothing here calls
// into the library's path search, env or heuristic.

#include <optional>
#include <utility>
#include <vector>

#include "nsp/rng.hpp"
#include "nsp/slice.hpp"
#include "nsp/topology.hpp"

namespace oracle {

using nsp::NodeId;
using nsp::Units;

/// Plain-array copy of a substrate's structure and ledgers.
struct Net {
  std::vector<bool> server;
  std::vector<Units> cpu, cpu_max, ram, ram_max;
  std::vector<std::pair<NodeId, NodeId>> ends;
  std::vector<Units> bw;

  static Net snapshot(const nsp::Psn& psn);
  std::size_t nodes() const { return server.size(); }
  bool operator==(const Net&) const = default;
};

/// Minimum-hop, then lexicographically smallest, simple path found by
/// enumerating every simple path. Node sequence including both ends.
std::optional<std::vector<NodeId>> brute_force_path(const Net& net, NodeId src, NodeId dst, Units bw);

/// Link index joining a and b.
std::size_t link_between(const Net& net, NodeId a, NodeId b);

struct Delta {
  double a = 0.0, b = 0.0, c = 0.0;
};

struct Episode {
  std::vector<Delta> deltas;
  double raw_reward = 0.0;
  bool accepted = false;
  std::size_t steps = 0;
};

/// Plays `actions` for `nspr` on `net` straight from the reward definitions:
/// delta_a = +-100, delta_b = post-allocation cpu/M + ram/M of the host,
/// delta_c = 1/|P| (1 when |P| = 0). Success pays sum a*b*c at the last
/// step; the first infeasible action pays -100 and undoes the episode.
/// Stops at the first failure; extra actions are ignored.
Episode play(Net& net, const nsp::Nspr& nspr, const std::vector<NodeId>& actions);

/// Connected random substrate of 3..max_nodes nodes with at least two
/// servers and random capacities.
nsp::Psn random_psn(nsp::Rng& rng, int max_nodes = 12);

/// Random chain of 1..max_vnfs VNFs sized against small substrates.
nsp::Nspr random_nspr(nsp::Rng& rng, std::int64_t id, int max_vnfs = 4);

}  // namespace oracle
