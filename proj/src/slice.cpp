#include "nsp/slice.hpp"

#include <stdexcept>

namespace nsp {

NsprClass volatile_class() {
  return NsprClass{"volatile", 5, 25, 150, 2 * kMbpsPerGbps, 20.0, 0.5};
}

NsprClass long_term_class() {
  return NsprClass{"long_term", 10, 25, 150, 2 * kMbpsPerGbps, 500.0, 0.5};
}

Units Nspr::incident_bw(int v) const {
  Units total = 0;
  if (v > 0) total += vl_bw;
  if (v + 1 < vnf_count) total += vl_bw;
  return total;
}

Nspr make_nspr(const NsprClass& cls, int class_index, std::int64_t id, double arrival_time, double lifespan) {
  if (!(lifespan > 0.0)) throw std::invalid_argument("NSPR lifespan must be > 0");
  if (cls.vnf_count < 1) throw std::invalid_argument("NSPR class needs at least one VNF");
  if (cls.cpu < 0 || cls.ram < 0 || cls.bw < 0) throw std::invalid_argument("NSPR requirements must be >= 0");

  Nspr n;
  n.id = id;
  n.class_index = class_index;
  n.class_name = cls.name;
  n.vnf_count = cls.vnf_count;
  n.cpu = cls.cpu;
  n.ram = cls.ram;
  n.vl_bw = cls.bw;
  n.arrival_time = arrival_time;
  n.lifespan = lifespan;
  return n;
}

}  // namespace nsp
