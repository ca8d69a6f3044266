#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

#include "nsp/kernels.hpp"

namespace nsp::kernels {

const char* to_string(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "?";
}

bool supported(Backend b) {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if defined(NSP_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const Ops& ops(Backend b) {
  if (!supported(b)) throw std::runtime_error(std::string("kernel backend not available: ") + to_string(b));
#if defined(NSP_HAVE_AVX2)
  if (b == Backend::Avx2) return avx2::table();
#endif
  return scalar::table();
}

Backend best_available() {
  return supported(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

namespace {

struct Selection {
  std::atomic<const Ops*> table;
  std::atomic<Backend> backend;
};

Backend initial_backend() {
  const char* env = std::getenv("NSP_KERNELS");
  if (env == nullptr) return best_available();
  const std::string_view want(env);
  if (want == "scalar") return Backend::Scalar;
  if (want == "avx2" && supported(Backend::Avx2)) return Backend::Avx2;
  return best_available();
}

Selection& selection() {
  static Selection s{&ops(initial_backend()), initial_backend()};
  return s;
}

}  // namespace

Backend active() {
  return selection().backend.load(std::memory_order_relaxed);
}

void select(Backend b) {
  const Ops* t = &ops(b);
  selection().table.store(t, std::memory_order_relaxed);
  selection().backend.store(b, std::memory_order_relaxed);
}

const Ops& current() {
  return *selection().table.load(std::memory_order_relaxed);
}

}  // namespace nsp::kernels
