#pragma once

#include <string>

#include "nsp/placement.hpp"

namespace nsp {

/// A homogeneous NSPR class: every VNF carries the same CPU/RAM demand and
/// every VL of the chain the same bandwidth.
struct NsprClass {
  std::string name;
  int vnf_count = 1;
  Units cpu = 0;
  Units ram = 0;
  Units bw = 0;  ///< per VL, Mbps
  double mean_lifespan = 1.0;
  double load_share = 1.0;

  int vl_count() const { return vnf_count - 1; }
  /// Total units of each resource one request of this class asks for (A^k_j).
  Units total_cpu() const { return static_cast<Units>(vnf_count) * cpu; }
  Units total_ram() const { return static_cast<Units>(vnf_count) * ram; }
  Units total_bw() const { return static_cast<Units>(vl_count()) * bw; }

  bool operator==(const NsprClass&) const = default;
};

/// 5 VNFs of 25 CPU / 150 RAM, 2 Gbps VLs, mean lifespan 20.
NsprClass volatile_class();
/// 10 VNFs of 25 CPU / 150 RAM, 2 Gbps VLs, mean lifespan 500.
NsprClass long_term_class();

/// A placement request: a chain VNF 0 - VNF 1 - ... with the class
/// requirements stamped on every element.
struct Nspr {
  std::int64_t id = 0;
  int class_index = 0;
  std::string class_name;
  int vnf_count = 1;
  Units cpu = 0;
  Units ram = 0;
  Units vl_bw = 0;
  double arrival_time = 0.0;
  double lifespan = 0.0;

  int vl_count() const { return vnf_count - 1; }
  /// VL i joins VNF i and VNF i + 1 (0-based).
  std::pair<int, int> vl_endpoints(int vl) const { return {vl, vl + 1}; }
  /// Sum of bandwidth over VLs incident to VNF `v` (0-based).
  Units incident_bw(int v) const;
  Units total_cpu() const { return static_cast<Units>(vnf_count) * cpu; }
};

/// Throws std::invalid_argument on lifespan <= 0 or an invalid class.
Nspr make_nspr(const NsprClass& cls, int class_index, std::int64_t id, double arrival_time, double lifespan);

}  // namespace nsp
