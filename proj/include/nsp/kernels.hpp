#pragma once

// Dense double-precision kernels behind the neural layers.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is picked once at startup from CPUID (or
// the NSP_KERNELS environment variable: "scalar", "avx2", "auto") and can
// be switched with select(). All matrices are row-major and contiguous.
// Variants agree to rounding, not bit-for-bit: a run is reproducible only
// under the same backend.

#include <cstddef>
#include <span>

namespace nsp::kernels {

enum class Backend { Scalar, Avx2 };

const char* to_string(Backend b);

struct Ops {
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  /// C[m x n] += A[k x m]^T * B[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  /// C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
};

bool supported(Backend b);
/// Kernel table for one backend; throws std::runtime_error if unsupported.
const Ops& ops(Backend b);
Backend active();
/// Throws std::runtime_error if the backend is not available here.
void select(Backend b);
/// Best backend the running CPU supports.
Backend best_available();

namespace scalar {
const Ops& table();
}

#if defined(NSP_HAVE_AVX2)
namespace avx2 {
const Ops& table();
}
#endif

// Active-backend entry points.
const Ops& current();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return current().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  current().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace nsp::kernels
