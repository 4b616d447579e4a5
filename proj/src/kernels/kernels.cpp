#include "pinnopt/kernels.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace pinnopt::kernels {
namespace {

using detail::KernelTable;

bool cpu_has_avx2() {
#if defined(PINNOPT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* table_for(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return &detail::kScalarTable;
    case Backend::Avx2:
#if defined(PINNOPT_HAVE_AVX2)
      return &detail::kAvx2Table;
#else
      return nullptr;
#endif
    case Backend::Neon:
#if defined(PINNOPT_HAVE_NEON)
      return &detail::kNeonTable;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Backend detect_backend() {
  if (backend_available(Backend::Avx2)) return Backend::Avx2;
  if (backend_available(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

struct ActiveState {
  std::atomic<Backend> backend{detect_backend()};
  std::atomic<const KernelTable*> table{table_for(backend.load())};
};

ActiveState& state() {
  static ActiveState s;
  return s;
}

inline const KernelTable& table() { return *state().table.load(std::memory_order_relaxed); }

void check_lengths(std::size_t a, std::size_t b, const char* kernel) {
  if (a != b) {
    throw std::invalid_argument(std::string("kernels::") + kernel + ": length mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return true;
    case Backend::Avx2: return cpu_has_avx2();
    case Backend::Neon:
#if defined(PINNOPT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() { return state().backend.load(); }

void set_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw std::invalid_argument("kernel backend '" + std::string(backend_name(backend)) + "' is not available");
  }
  state().table.store(table_for(backend));
  state().backend.store(backend);
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size(), "dot");
  return table().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_lengths(x.size(), y.size(), "axpy");
  table().axpy(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) { table().scale(alpha, x.data(), x.size()); }

}  // namespace pinnopt::kernels
