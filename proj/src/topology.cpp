#include "nsp/topology.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>

namespace nsp {

const char* to_string(Resource r) {
  switch (r) {
    case Resource::Cpu: return "cpu";
    case Resource::Ram: return "ram";
    case Resource::Bandwidth: return "bandwidth";
  }
  return "?";
}

const char* to_string(DcKind kind) {
  switch (kind) {
    case DcKind::Edge: return "edc";
    case DcKind::Core: return "cdc";
    case DcKind::Cloud: return "ccp";
  }
  return "?";
}

NodeId Psn::add_switch(int dc) {
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(Node{id, NodeKind::Switch, dc, 0, 0, 0, 0});
  adjacency_.emplace_back();
  return id;
}

NodeId Psn::add_server(int dc, Units cpu, Units ram) {
  if (cpu < 0 || ram < 0) throw std::invalid_argument("server capacities must be non-negative");
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(Node{id, NodeKind::Server, dc, cpu, cpu, ram, ram});
  adjacency_.emplace_back();
  servers_.push_back(id);
  if (dc >= 0 && static_cast<std::size_t>(dc) < dcs_.size()) dcs_[static_cast<std::size_t>(dc)].servers.push_back(id);
  return id;
}

int Psn::add_dc(DcKind kind, NodeId switch_id) {
  const auto id = static_cast<int>(dcs_.size());
  dcs_.push_back(DataCenter{id, kind, switch_id, {}});
  return id;
}

LinkId Psn::add_link(NodeId a, NodeId b, Units bw) {
  const auto n = static_cast<NodeId>(nodes_.size());
  if (a < 0 || b < 0 || a >= n || b >= n) throw std::out_of_range("link endpoint out of range");
  if (a == b) throw std::invalid_argument("self-loop links are not allowed");
  if (bw < 0) throw std::invalid_argument("link capacity must be non-negative");
  if (find_link(a, b)) throw std::invalid_argument("duplicate link between nodes");

  const auto id = static_cast<LinkId>(links_.size());
  links_.push_back(Link{a, b, bw, bw});
  auto insert_sorted = [](std::vector<Adjacent>& adj, Adjacent entry) {
    auto it = std::lower_bound(adj.begin(), adj.end(), entry,
                               [](const Adjacent& x, const Adjacent& y) { return x.node < y.node; });
    adj.insert(it, entry);
  };
  insert_sorted(adjacency_[static_cast<std::size_t>(a)], {b, id});
  insert_sorted(adjacency_[static_cast<std::size_t>(b)], {a, id});
  return id;
}

std::optional<LinkId> Psn::find_link(NodeId a, NodeId b) const {
  if (a < 0 || static_cast<std::size_t>(a) >= adjacency_.size()) return std::nullopt;
  for (const auto& adj : adjacency_[static_cast<std::size_t>(a)]) {
    if (adj.node == b) return adj.link;
  }
  return std::nullopt;
}

Units Psn::node_bw(NodeId id) const {
  Units total = 0;
  for (const auto& adj : neighbors(id)) total += links_[static_cast<std::size_t>(adj.link)].bw;
  return total;
}

Units Psn::node_bw_max(NodeId id) const {
  Units total = 0;
  for (const auto& adj : neighbors(id)) total += links_[static_cast<std::size_t>(adj.link)].bw_max;
  return total;
}

Units Psn::total_cpu_max() const {
  Units total = 0;
  for (const auto& n : nodes_) total += n.cpu_max;
  return total;
}

Units Psn::total_ram_max() const {
  Units total = 0;
  for (const auto& n : nodes_) total += n.ram_max;
  return total;
}

bool Psn::connected() const {
  if (nodes_.empty()) return true;
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    for (const auto& adj : neighbors(cur)) {
      auto& mark = seen[static_cast<std::size_t>(adj.node)];
      if (!mark) {
        mark = 1;
        ++count;
        stack.push_back(adj.node);
      }
    }
  }
  return count == nodes_.size();
}

void Psn::allocate(NodeId node_id, Units cpu, Units ram, std::span<const PathDemand> paths) {
  if (cpu < 0 || ram < 0) throw std::invalid_argument("negative allocation");
  const Node& n = node(node_id);
  if (cpu > n.cpu) {
    throw CapacityError(Resource::Cpu, node_id,
                        "cpu: node " + std::to_string(node_id) + " has " + std::to_string(n.cpu) + ", needs " +
                            std::to_string(cpu));
  }
  if (ram > n.ram) {
    throw CapacityError(Resource::Ram, node_id,
                        "ram: node " + std::to_string(node_id) + " has " + std::to_string(n.ram) + ", needs " +
                            std::to_string(ram));
  }

  // Aggregate per link in first-seen order so the reported link is the
  // first violated one along the given paths.
  std::vector<std::pair<LinkId, Units>> demand;
  for (const auto& pd : paths) {
    if (pd.bw < 0) throw std::invalid_argument("negative bandwidth demand");
    for (const LinkId l : pd.path.links) {
      auto it = std::find_if(demand.begin(), demand.end(), [l](const auto& d) { return d.first == l; });
      if (it == demand.end()) {
        demand.emplace_back(l, pd.bw);
      } else {
        it->second += pd.bw;
      }
    }
  }
  for (const auto& [l, bw] : demand) {
    const Link& lk = link(l);
    if (bw > lk.bw) {
      throw CapacityError(Resource::Bandwidth, l,
                          "bandwidth: link " + std::to_string(l) + " (" + std::to_string(lk.a) + "-" +
                              std::to_string(lk.b) + ") has " + std::to_string(lk.bw) + " Mbps, needs " +
                              std::to_string(bw));
    }
  }

  auto& target = nodes_[static_cast<std::size_t>(node_id)];
  target.cpu -= cpu;
  target.ram -= ram;
  for (const auto& [l, bw] : demand) links_[static_cast<std::size_t>(l)].bw -= bw;
}

void Psn::release(PlacementRecord& record) {
  if (record.released) {
    throw IntegrityError("placement of NSPR " + std::to_string(record.nspr_id) + " released twice");
  }
  if (record.vnf_cpu.size() != record.hosts.size() || record.vnf_ram.size() != record.hosts.size() ||
      record.vl_bw.size() != record.vl_paths.size()) {
    throw IntegrityError("malformed placement record");
  }

  std::map<NodeId, std::pair<Units, Units>> node_back;
  for (std::size_t i = 0; i < record.hosts.size(); ++i) {
    auto& acc = node_back[record.hosts[i]];
    acc.first += record.vnf_cpu[i];
    acc.second += record.vnf_ram[i];
  }
  std::map<LinkId, Units> link_back;
  for (std::size_t i = 0; i < record.vl_paths.size(); ++i) {
    for (const LinkId l : record.vl_paths[i].links) link_back[l] += record.vl_bw[i];
  }

  for (const auto& [id, amount] : node_back) {
    const Node& n = node(id);
    if (n.cpu + amount.first > n.cpu_max || n.ram + amount.second > n.ram_max) {
      throw IntegrityError("over-release on node " + std::to_string(id));
    }
  }
  for (const auto& [id, bw] : link_back) {
    const Link& lk = link(id);
    if (lk.bw + bw > lk.bw_max) throw IntegrityError("over-release on link " + std::to_string(id));
  }

  for (const auto& [id, amount] : node_back) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    n.cpu += amount.first;
    n.ram += amount.second;
  }
  for (const auto& [id, bw] : link_back) links_[static_cast<std::size_t>(id)].bw += bw;
  record.released = true;
}

void Psn::check_invariants() const {
  for (const auto& n : nodes_) {
    if (n.cpu < 0 || n.cpu > n.cpu_max || n.ram < 0 || n.ram > n.ram_max) {
      throw IntegrityError("node " + std::to_string(n.id) + " ledger out of range");
    }
    if (!n.is_server() && (n.cpu_max != 0 || n.ram_max != 0)) {
      throw IntegrityError("switch " + std::to_string(n.id) + " carries compute capacity");
    }
  }
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const auto& l = links_[i];
    if (l.bw < 0 || l.bw > l.bw_max) throw IntegrityError("link " + std::to_string(i) + " ledger out of range");
  }
}

bool Psn::same_capacities(const Psn& other) const {
  if (nodes_.size() != other.nodes_.size() || links_.size() != other.links_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].cpu != other.nodes_[i].cpu || nodes_[i].ram != other.nodes_[i].ram) return false;
  }
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (links_[i].bw != other.links_[i].bw) return false;
  }
  return true;
}

std::vector<std::string> TopologyConfig::validate() const {
  std::vector<std::string> errors;
  auto check_profile = [&](const char* name, const DcProfile& p) {
    const std::string prefix = std::string("topology.") + name;
    if (p.count < 0) errors.push_back(prefix + ".count: must be >= 0");
    if (p.servers < 0) errors.push_back(prefix + ".servers: must be >= 0");
    if (p.intra_bw <= 0) errors.push_back(prefix + ".intra_bw_gbps: must be > 0");
    if (p.transport_bw <= 0) errors.push_back(prefix + ".transport_bw_gbps: must be > 0");
  };
  check_profile("edc", edc);
  check_profile("cdc", cdc);
  check_profile("ccp", ccp);
  if (server_cpu <= 0) errors.push_back("topology.server_cpu: must be > 0");
  if (server_ram <= 0) errors.push_back("topology.server_ram: must be > 0");
  if (!errors.empty()) return errors;

  const long long server_total = static_cast<long long>(edc.count) * edc.servers +
                                 static_cast<long long>(cdc.count) * cdc.servers +
                                 static_cast<long long>(ccp.count) * ccp.servers;
  if (server_total == 0) errors.push_back("topology: at least one server is required");
  const int dc_total = edc.count + cdc.count + ccp.count;
  if (dc_total > 1 && cdc.count == 0 && ccp.count == 0) {
    errors.push_back("topology: several EDCs need at least one CDC or CCP to be connected");
  }
  return errors;
}

Psn build_reference_psn(const TopologyConfig& cfg) {
  if (auto errors = cfg.validate(); !errors.empty()) throw std::invalid_argument(errors.front());

  Psn psn;
  std::vector<NodeId> edc_sw;
  std::vector<NodeId> cdc_sw;
  std::vector<NodeId> ccp_sw;

  auto add_tier = [&](DcKind kind, const DcProfile& profile, std::vector<NodeId>& switches) {
    for (int i = 0; i < profile.count; ++i) {
      const int dc = static_cast<int>(psn.dcs().size());
      const NodeId sw = psn.add_switch(dc);
      psn.add_dc(kind, sw);
      switches.push_back(sw);
      for (int s = 0; s < profile.servers; ++s) {
        const NodeId server = psn.add_server(dc, cfg.server_cpu, cfg.server_ram);
        psn.add_link(sw, server, profile.intra_bw);
      }
    }
  };
  add_tier(DcKind::Edge, cfg.edc, edc_sw);
  add_tier(DcKind::Core, cfg.cdc, cdc_sw);
  add_tier(DcKind::Cloud, cfg.ccp, ccp_sw);

  const auto& parents = cdc_sw.empty() ? ccp_sw : cdc_sw;
  for (std::size_t i = 0; i < edc_sw.size(); ++i) {
    psn.add_link(edc_sw[i], parents[i % parents.size()], cfg.edc.transport_bw);
  }
  for (std::size_t i = 0; i < cdc_sw.size(); ++i) {
    for (std::size_t j = i + 1; j < cdc_sw.size(); ++j) psn.add_link(cdc_sw[i], cdc_sw[j], cfg.cdc.transport_bw);
  }
  for (const NodeId c : cdc_sw) {
    for (const NodeId p : ccp_sw) psn.add_link(c, p, cfg.ccp.transport_bw);
  }
  for (std::size_t i = 0; i < ccp_sw.size(); ++i) {
    for (std::size_t j = i + 1; j < ccp_sw.size(); ++j) psn.add_link(ccp_sw[i], ccp_sw[j], cfg.ccp.transport_bw);
  }
  return psn;
}

std::optional<Path> shortest_feasible_path(const Psn& psn, NodeId src, NodeId dst, Units bw) {
  const auto n = psn.node_count();
  if (src < 0 || dst < 0 || static_cast<std::size_t>(src) >= n || static_cast<std::size_t>(dst) >= n) {
    throw std::out_of_range("path endpoint out of range");
  }
  if (src == dst) return Path{};

  // Hop distances to dst over feasible links, then a greedy walk from src
  // that always steps to the smallest-id neighbour one hop closer. That walk
  // is the lexicographically smallest shortest path.
  constexpr int kUnreached = std::numeric_limits<int>::max();
  std::vector<int> dist(n, kUnreached);
  std::deque<NodeId> queue{dst};
  dist[static_cast<std::size_t>(dst)] = 0;
  while (!queue.empty()) {
    const NodeId cur = queue.front();
    queue.pop_front();
    if (cur == src) break;
    for (const auto& adj : psn.neighbors(cur)) {
      if (psn.link(adj.link).bw < bw) continue;
      auto& d = dist[static_cast<std::size_t>(adj.node)];
      if (d == kUnreached) {
        d = dist[static_cast<std::size_t>(cur)] + 1;
        queue.push_back(adj.node);
      }
    }
  }
  if (dist[static_cast<std::size_t>(src)] == kUnreached) return std::nullopt;

  Path path;
  path.nodes.push_back(src);
  NodeId cur = src;
  while (cur != dst) {
    const int want = dist[static_cast<std::size_t>(cur)] - 1;
    for (const auto& adj : psn.neighbors(cur)) {
      if (psn.link(adj.link).bw >= bw && dist[static_cast<std::size_t>(adj.node)] == want) {
        path.links.push_back(adj.link);
        path.nodes.push_back(adj.node);
        cur = adj.node;
        break;
      }
    }
  }
  return path;
}

}  // namespace nsp
