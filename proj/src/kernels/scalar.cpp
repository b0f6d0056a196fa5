#include <cmath>
#include <cstddef>

#include "softarm/kernels/kernels.hpp"

namespace softarm::kernels {

namespace {

#include "cholesky_impl.hpp"

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(a + r * cols, x, cols);
}

bool cholesky_factor_scalar(double* a, std::size_t n) {
  return cholesky_factor_with(a, n, dot_scalar);
}

void cholesky_solve_scalar(const double* l, std::size_t n, double* b) {
  cholesky_solve_with(l, n, b, dot_scalar, axpy_scalar);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar",          dot_scalar,
                                 axpy_scalar,       gemv_scalar,
                                 cholesky_factor_scalar, cholesky_solve_scalar};
  return table;
}

}  // namespace softarm::kernels
