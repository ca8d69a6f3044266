#include "nsp/heuristic.hpp"

#include <limits>

namespace nsp {

NodeId heu_select(const State& state, const Psn& psn) {
  const auto servers = psn.servers();
  if (servers.empty()) throw std::logic_error("substrate has no servers");

  const bool first = state.vnf_index == 1 || !state.prev_host.has_value();

  NodeId best = -1;
  double best_balance = -std::numeric_limits<double>::infinity();
  std::size_t best_hops = std::numeric_limits<std::size_t>::max();

  for (const NodeId s : servers) {
    const Node& node = psn.node(s);
    if (node.cpu < state.req_cpu || node.ram < state.req_ram) continue;
    std::size_t hops = 0;
    if (!first) {
      const auto path = shortest_feasible_path(psn, *state.prev_host, s, state.vl_bw);
      if (!path) continue;
      hops = path->hops();
    }
    const double balance = static_cast<double>(node.cpu - state.req_cpu) / static_cast<double>(node.cpu_max) +
                           static_cast<double>(node.ram - state.req_ram) / static_cast<double>(node.ram_max);
    if (balance > best_balance || (balance == best_balance && hops < best_hops)) {
      best = s;
      best_balance = balance;
      best_hops = hops;
    }
  }
  return best >= 0 ? best : servers.front();
}

}  // namespace nsp
