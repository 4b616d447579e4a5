#pragma once

#include <cstddef>

namespace pinnopt::kernels::detail {

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
};

extern const KernelTable kScalarTable;
#if defined(PINNOPT_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(PINNOPT_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

}  // namespace pinnopt::kernels::detail
