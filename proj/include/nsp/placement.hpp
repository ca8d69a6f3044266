#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsp {

using NodeId = std::int32_t;
using LinkId = std::int32_t;

/// CPU and RAM are integral resource units; bandwidth is integral Mbps.
using Units = std::int64_t;

inline constexpr Units kMbpsPerGbps = 1000;

/// A walk through the substrate. `nodes` has one more entry than `links`,
/// except for the empty path which has no nodes and no links.
struct Path {
  std::vector<NodeId> nodes;
  std::vector<LinkId> links;

  std::size_t hops() const { return links.size(); }
  bool empty() const { return links.empty(); }
  bool operator==(const Path&) const = default;
};

struct PathDemand {
  Path path;
  Units bw = 0;
};

/// Everything that was reserved on the substrate for one NSPR. Hosts are
/// listed in VNF order; `vl_paths[i]` carries VL (i, i+1) between
/// `hosts[i]` and `hosts[i+1]`. A partially placed NSPR has fewer hosts than
/// VNFs and is never `complete`.
struct PlacementRecord {
  std::int64_t nspr_id = -1;
  std::vector<NodeId> hosts;
  std::vector<Units> vnf_cpu;
  std::vector<Units> vnf_ram;
  std::vector<Path> vl_paths;
  std::vector<Units> vl_bw;
  bool complete = false;
  bool released = false;
};

enum class Resource { Cpu, Ram, Bandwidth };

const char* to_string(Resource r);

/// Raised by allocation when a ledger would go negative. No state changes.
class CapacityError : public std::runtime_error {
 public:
  CapacityError(Resource resource, std::int64_t where, const std::string& what)
      : std::runtime_error(what), resource_(resource), where_(where) {}

  Resource resource() const { return resource_; }
  /// Node id for CPU/RAM, link id for bandwidth.
  std::int64_t where() const { return where_; }

 private:
  Resource resource_;
  std::int64_t where_;
};

/// Ledger corruption: over-release, double release, broken invariants.
class IntegrityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace nsp
