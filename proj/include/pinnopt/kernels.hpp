#pragma once

// Dense arithmetic kernels shared by the network evaluator, the trainer and
// the simplex tableau. Each kernel has a scalar reference implementation and
// SIMD variants (AVX2 on x86-64, NEON on AArch64). The variant is picked once
// at startup from the CPU's capabilities and can be overridden for testing.

#include <span>
#include <string_view>

namespace pinnopt::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view backend_name(Backend backend);

/// True when the variant was compiled in and the running CPU supports it.
bool backend_available(Backend backend);

Backend active_backend();

/// Switches every subsequent kernel call to `backend`. Throws
/// std::invalid_argument if the backend is unavailable.
void set_backend(Backend backend);

/// Sum of a[i] * b[i]. Lengths must match.
double dot(std::span<const double> a, std::span<const double> b);

/// y[i] += alpha * x[i]. Lengths must match. Bitwise identical across
/// backends (no fused multiply-add).
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// x[i] *= alpha.
void scale(double alpha, std::span<double> x);

/// RAII override of the active backend, restoring the previous one on exit.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend backend) : previous_(active_backend()) { set_backend(backend); }
  ~ScopedBackend() { set_backend(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

}  // namespace pinnopt::kernels
