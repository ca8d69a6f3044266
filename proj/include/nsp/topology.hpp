#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsp/placement.hpp"

namespace nsp {

enum class NodeKind : std::uint8_t { Server, Switch };
enum class DcKind : std::uint8_t { Edge, Core, Cloud };

const char* to_string(DcKind kind);

struct Node {
  NodeId id = 0;
  NodeKind kind = NodeKind::Switch;
  int dc = -1;
  Units cpu = 0;
  Units cpu_max = 0;
  Units ram = 0;
  Units ram_max = 0;

  bool is_server() const { return kind == NodeKind::Server; }
  bool operator==(const Node&) const = default;
};

struct Link {
  NodeId a = 0;
  NodeId b = 0;
  Units bw = 0;
  Units bw_max = 0;

  NodeId other(NodeId n) const { return n == a ? b : a; }
  bool operator==(const Link&) const = default;
};

struct DataCenter {
  int id = 0;
  DcKind kind = DcKind::Edge;
  NodeId switch_id = 0;
  std::vector<NodeId> servers;
};

struct Adjacent {
  NodeId node;
  LinkId link;
};

/// Sizing of one data-center tier.
struct DcProfile {
  int count = 0;
  int servers = 0;
  Units intra_bw = 0;      ///< server-switch links, Mbps
  Units transport_bw = 0;  ///< links leaving this tier's switches, Mbps

  bool operator==(const DcProfile&) const = default;
};

/// Reference substrate sizing. Defaults: 15 EDCs of 4 servers, 5 CDCs of
/// 10 servers and one CCP of 16 servers; every server 50 CPU / 300 RAM.
struct TopologyConfig {
  DcProfile edc{15, 4, 10 * kMbpsPerGbps, 10 * kMbpsPerGbps};
  DcProfile cdc{5, 10, 100 * kMbpsPerGbps, 100 * kMbpsPerGbps};
  DcProfile ccp{1, 16, 100 * kMbpsPerGbps, 100 * kMbpsPerGbps};
  Units server_cpu = 50;
  Units server_ram = 300;

  /// Every problem found, empty when the config is buildable.
  std::vector<std::string> validate() const;
  bool operator==(const TopologyConfig&) const = default;
};

/// Physical substrate network: undirected graph with CPU/RAM ledgers on
/// servers and bandwidth ledgers on links.
///
/// Node ids are dense in [0, node_count()). Neighbour lists are kept sorted
/// by node id so traversal order is deterministic.
class Psn {
 public:
  NodeId add_switch(int dc);
  NodeId add_server(int dc, Units cpu, Units ram);
  LinkId add_link(NodeId a, NodeId b, Units bw);
  int add_dc(DcKind kind, NodeId switch_id);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const Link& link(LinkId id) const { return links_.at(static_cast<std::size_t>(id)); }
  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Link> links() const { return links_; }
  std::span<const NodeId> servers() const { return servers_; }
  std::span<const DataCenter> dcs() const { return dcs_; }
  std::span<const Adjacent> neighbors(NodeId id) const { return adjacency_.at(static_cast<std::size_t>(id)); }
  std::optional<LinkId> find_link(NodeId a, NodeId b) const;

  /// Sum of current capacities of links incident to `id`.
  Units node_bw(NodeId id) const;
  /// Sum of initial capacities of links incident to `id` (M^bw).
  Units node_bw_max(NodeId id) const;

  Units total_cpu_max() const;
  Units total_ram_max() const;

  bool connected() const;

  /// Atomically reserve CPU/RAM on `node` and bandwidth along every path.
  /// Throws CapacityError naming the first short resource; nothing changes
  /// in that case. Bandwidth demands of different paths crossing the same
  /// link are summed before checking.
  void allocate(NodeId node, Units cpu, Units ram, std::span<const PathDemand> paths = {});

  /// Exact inverse of all reservations in `record`. Throws IntegrityError
  /// (without mutating) on double release or if any ledger would exceed
  /// its maximum.
  void release(PlacementRecord& record);

  /// Throws IntegrityError if a ledger is out of [0, max].
  void check_invariants() const;

  /// Ledgers compare equal (structure is assumed identical).
  bool same_capacities(const Psn& other) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<NodeId> servers_;
  std::vector<DataCenter> dcs_;
  std::vector<std::vector<Adjacent>> adjacency_;
};

/// Builds the switch-per-DC reference wiring: servers hang off their DC
/// switch, EDC switches attach round-robin to CDC switches (to CCP switches
/// when there are no CDCs), CDC switches form a full mesh and each attaches
/// to every CCP switch, CCP switches form a full mesh. Node ids are assigned
/// DC by DC (EDCs, CDCs, CCPs), switch first.
Psn build_reference_psn(const TopologyConfig& cfg);

/// Minimum-hop path from `src` to `dst` over links with residual bandwidth
/// >= `bw`. Among minimum-hop paths the lexicographically smallest node-id
/// sequence wins. `src == dst` yields the empty path.
std::optional<Path> shortest_feasible_path(const Psn& psn, NodeId src, NodeId dst, Units bw);

}  // namespace nsp
