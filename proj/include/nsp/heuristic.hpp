#pragma once

#include "nsp/env.hpp"

namespace nsp {

/// Greedy placement rule used both as the baseline agent and as the
/// preferred action a* for policy shaping.
///
/// Among servers with enough CPU and RAM (and, past the first VNF, a
/// bandwidth-feasible path from the previous host) pick the one with the
/// highest post-allocation load-balancing term cpu/M_cpu + ram/M_ram. Ties go
/// to the shorter path, then the smaller id. With no feasible server the
/// smallest server id is returned so the environment rejects the request.
NodeId heu_select(const State& state, const Psn& psn);

}  // namespace nsp
